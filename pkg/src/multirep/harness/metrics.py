"""
Metrics records and result files.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from threading import Lock
from typing import Any, Iterable, Mapping, Optional, Sequence, TextIO, Union

import numpy as np

from multirep.objectives import LossBreakdown


PathLike = Union[str, Path]


def mean_std(values: Iterable[float]) -> tuple[float, float]:
    """Mean and population standard deviation; (0, 0) when empty."""
    array = np.asarray(list(values), dtype=np.float64)
    if array.size == 0:
        return 0.0, 0.0
    return float(array.mean()), float(array.std())


@dataclass
class Metrics:
    """
    Accuracy over seeds and the loss history of training.

    Attributes:
        accuracy: Mean accuracy across seeds, in [0, 1].
        std: Standard deviation of the per-seed accuracies.
        per_seed: Seed -> accuracy.
        episodes: Episodes per seed.
        history: Per-step loss breakdowns of training, when any.
    """
    accuracy: float = 0.0
    std: float = 0.0
    per_seed: dict[int, float] = field(default_factory=dict)
    episodes: int = 0
    history: list[LossBreakdown] = field(default_factory=list)

    @classmethod
    def from_seeds(cls, per_seed: Mapping[int, float], episodes: int) -> "Metrics":
        accuracy, std = mean_std(per_seed.values())
        return cls(accuracy=accuracy, std=std, per_seed=dict(per_seed), episodes=episodes)

    def to_dict(self) -> dict[str, Any]:
        return {
            "accuracy": self.accuracy,
            "std": self.std,
            "per_seed": {str(s): a for s, a in self.per_seed.items()},
            "episodes": self.episodes,
        }


class JsonLinesWriter:
    """
    Append-only JSON-lines sink.

    Keys are written sorted so identical records give identical bytes.

    Example:
        with JsonLinesWriter("runs/a/train.jsonl") as log:
            log.write({"step": 1, "total": 2.5})
    """

    def __init__(self, path: Optional[PathLike] = None, stream: Optional[TextIO] = None):
        if path is None and stream is None:
            raise ValueError("JsonLinesWriter needs a path or a stream")
        self.path = Path(path) if path is not None else None
        self._stream = stream
        self._owns = False
        self._lock = Lock()

    def open(self) -> "JsonLinesWriter":
        if self._stream is None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._stream = self.path.open("w", encoding="utf-8")
            self._owns = True
        return self

    def write(self, record: Mapping[str, Any]) -> None:
        line = json.dumps(_finite(record), sort_keys=True, separators=(",", ":"))
        with self._lock:
            if self._stream is None:
                self.open()
            self._stream.write(line + "\n")
            self._stream.flush()

    def close(self) -> None:
        with self._lock:
            if self._owns and self._stream is not None:
                self._stream.close()
                self._stream = None
                self._owns = False

    def __enter__(self) -> "JsonLinesWriter":
        return self.open()

    def __exit__(self, *exc: Any) -> None:
        self.close()


def _finite(record: Mapping[str, Any]) -> dict[str, Any]:
    # JSON has no NaN/inf; write them as strings.
    out = {}
    for key, value in record.items():
        if isinstance(value, float) and not math.isfinite(value):
            value = str(value)
        out[key] = value
    return out


def read_json_lines(path: PathLike) -> list[dict[str, Any]]:
    with Path(path).open(encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """
    Write a CSV table; floats are written with repr precision.

    Returns:
        Number of data rows written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)
            count += 1
    return count


def read_csv(path: PathLike) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))
