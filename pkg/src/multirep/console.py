#!/usr/bin/env python3
"""
MultiRep command line.

Usage:
    multirep gen-synthetic --out data/synthetic
    multirep train --config run.json --out runs/a
    multirep eval --checkpoint runs/a/best --grid --out runs/a
    multirep ablate --seeds 0,1,2 --out runs/ablation
    multirep sweep-m --iterations 500 --out runs/sweep
    multirep export-embeddings --checkpoint runs/a/best --out runs/a
    multirep gradcheck

Exit codes: 0 success, 1 configuration or data error, 2 numerical failure.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace
from typing import Any, Callable, Optional, Sequence

from multirep import __version__
from multirep.command import CommandContext, CommandRegistry, default_registry
from multirep.exceptions import MultiRepError
from multirep.harness import ARMS, RunConfig, flatten_config
from multirep.objectives import ScoreMode


logger = logging.getLogger("multirep")

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Flags that only shape the RunConfig; everything else becomes a command option.
CONFIG_FLAGS = (
    "config", "set", "data", "eval_data", "descriptions", "seed", "seeds",
    "n", "k", "q", "no_descriptions", "score_mode", "tau", "iterations",
    "eval_episodes", "workers", "precision",
)
DATA_FLAGS = ("config", "data", "eval_data", "descriptions")


def _csv(convert: Callable[[str], Any]) -> Callable[[str], list]:
    def parse(text: str) -> list:
        try:
            return [convert(part.strip()) for part in text.split(",") if part.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    return parse


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    run = common.add_argument_group("run configuration")
    run.add_argument("--config", "-c", help="JSON run config")
    run.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="Override a config value by dotted key, e.g. loss.temperature=0.05 (repeatable)",
    )
    run.add_argument("--data", help="FewRel-format training split (default: synthetic corpus)")
    run.add_argument("--eval-data", help="FewRel-format held-out split, required with --data")
    run.add_argument("--descriptions", help="Relation descriptions JSON")
    run.add_argument("--seed", type=int, help="Seed of a single run")
    run.add_argument("--seeds", type=_csv(int), help="Comma-separated seeds to average over")
    run.add_argument("--n", type=int, help="Classes per episode")
    run.add_argument("--k", type=int, help="Support instances per class")
    run.add_argument("--q", type=int, help="Query instances per class (default: K when --k is given)")
    run.add_argument(
        "--no-descriptions", action="store_true",
        help="Disable description encoding, description scoring and the description loss",
    )
    run.add_argument("--score-mode", choices=[m.value for m in ScoreMode], help="How descriptions enter scores")
    run.add_argument("--tau", type=float, help="Contrastive temperature")
    run.add_argument("--iterations", type=int, help="Training steps")
    run.add_argument("--eval-episodes", type=int, help="Episodes per evaluation cell and seed")
    run.add_argument("--workers", type=int, help="Evaluation threads")
    run.add_argument("--precision", choices=["single", "double"], help="Floating point precision")
    common.add_argument("--out", "-o", help="Output directory (default: the config's output_dir)")
    return common


def _add_command_arguments(name: str, parser: argparse.ArgumentParser) -> None:
    if name in ("eval", "export-embeddings", "export-predictions"):
        parser.add_argument("--checkpoint", help="Checkpoint directory, e.g. runs/a/best")
    if name in ("export-embeddings", "export-predictions"):
        parser.add_argument("--split", choices=["train", "validation", "eval"], help="Split to sample from (default: eval)")
    if name == "train":
        parser.add_argument(
            "--all-seeds", action="store_true",
            help="Train every seed of the config and evaluate each best checkpoint",
        )
    elif name == "eval":
        parser.add_argument("--grid", action="store_true", help="Evaluate the 5/10-way 1/5-shot grid")
    elif name == "ablate":
        parser.add_argument(
            "--arms", type=_csv(str),
            help=f"Comma-separated arms (default: full and all ablations). Valid: {', '.join(ARMS)}",
        )
    elif name == "sweep-m":
        parser.add_argument("--sizes", type=_csv(int), help="Representation counts M (default: 1..M)")
    elif name == "export-embeddings":
        parser.add_argument("--count", type=int, help="Support embeddings to export (default: 120)")
        parser.add_argument("--component", help="'full' or one representation tag (default: full)")
    elif name == "export-predictions":
        parser.add_argument("--episodes", type=int, help="Episodes to export (default: 10)")
    elif name == "gradcheck":
        parser.add_argument("--trials", type=int, help="Random draws per operation (default: 10)")
        parser.add_argument("--tolerance", type=float, help="Relative error threshold (default: 1e-4)")


def build_parser(registry: CommandRegistry) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multirep",
        description="Few-shot relation classification with multiple sentence representations",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="Exit codes: 0 success, 1 configuration or data error, 2 numerical failure.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: INFO)",
    )
    common = _common_parser()
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for name in registry.list_commands():
        handler = registry.get(name)
        sub = commands.add_parser(name, parents=[common], help=handler.help, aliases=handler.aliases)
        _add_command_arguments(name, sub)
    return parser


def build_config(args: argparse.Namespace) -> RunConfig:
    """
    RunConfig from ``--config`` and ``--set`` with the flag overrides applied.

    Raises:
        ConfigurationError: On unreadable configs or invalid values.
    """
    config = RunConfig.load(args.config) if args.config else RunConfig()
    if args.set:
        config = config.override(args.set)

    if args.data or args.eval_data or args.descriptions:
        data = config.data
        config = replace(config, data=replace(
            data,
            train_path=args.data or data.train_path,
            eval_path=args.eval_data or data.eval_path,
            descriptions_path=args.descriptions or data.descriptions_path,
        ))
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.seeds:
        config = replace(config, seeds=tuple(args.seeds))
    if args.n is not None or args.k is not None or args.q is not None:
        config = config.with_episodes(args.n, args.k, args.q)

    loss = config.loss
    if args.tau is not None:
        loss = replace(loss, temperature=args.tau)
    if args.score_mode is not None:
        loss = replace(loss, score_mode=ScoreMode(args.score_mode))
    if args.no_descriptions:
        loss = loss.without_descriptions()
    if loss != config.loss:
        config = replace(config, loss=loss)

    scalars = {
        "iterations": args.iterations,
        "eval_episodes": args.eval_episodes,
        "workers": args.workers,
        "precision": args.precision,
    }
    scalars = {key: value for key, value in scalars.items() if value is not None}
    if scalars:
        config = replace(config, **scalars)
    return config


def command_options(args: argparse.Namespace) -> dict[str, Any]:
    """Options handed to the handler: every non-config flag plus ``explicit_data``."""
    options = {
        key: value for key, value in vars(args).items()
        if key not in CONFIG_FLAGS and key not in ("command", "log_level")
    }
    options["explicit_data"] = any(getattr(args, flag) for flag in DATA_FLAGS)
    # Scoring flags also apply to models rebuilt from checkpoints.
    options["no_descriptions"] = args.no_descriptions
    options["score_mode"] = args.score_mode
    return options


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point; returns the process exit code."""
    registry = default_registry()
    args = build_parser(registry).parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)

    try:
        config = build_config(args)
    except MultiRepError as e:
        logger.error("Invalid configuration: %s", e)
        return e.exit_code
    for key, value in sorted(flatten_config(config.to_dict()).items()):
        logger.debug("config %s = %r", key, value)

    context = CommandContext(command=args.command, config=config, options=command_options(args))
    result = registry.execute(context)
    if result.is_success:
        print(json.dumps(result.data, indent=2, sort_keys=True))
    else:
        print(f"error: {result.error}", file=sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
