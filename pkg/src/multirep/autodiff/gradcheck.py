"""
Finite-difference gradient checking.

Analytic gradients from `backward` are compared with central differences
computed by re-running the loss function on perturbed copies of each
input. Checks always run in double precision.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from multirep.autodiff.precision import using_precision
from multirep.autodiff.tensor import ArrayLike, ComputationRecord, Tensor, backward
from multirep.exceptions import ContractError, GradientCheckError


logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-4
DEFAULT_TOLERANCE = 1e-4

LossFunction = Callable[[Mapping[str, Tensor]], Tensor]


@dataclass
class GradCheckResult:
    """Outcome of checking one named input."""
    name: str
    shape: tuple[int, ...]
    error: float
    tolerance: float
    entries_checked: int

    @property
    def passed(self) -> bool:
        return self.error < self.tolerance

    def __str__(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return f"{self.name} {self.shape}: rel_error={self.error:.3e} [{status}]"


@dataclass
class GradCheckReport:
    """Results of one or more gradient checks."""
    results: list[GradCheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[GradCheckResult]:
        return [r for r in self.results if not r.passed]

    @property
    def max_error(self) -> float:
        return max((r.error for r in self.results), default=0.0)

    def extend(self, other: "GradCheckReport", prefix: str = "") -> None:
        """Append another report's results, optionally prefixing names."""
        for r in other.results:
            self.results.append(
                GradCheckResult(
                    name=f"{prefix}{r.name}",
                    shape=r.shape,
                    error=r.error,
                    tolerance=r.tolerance,
                    entries_checked=r.entries_checked,
                )
            )

    def raise_for_failures(self) -> None:
        """
        Raises:
            GradientCheckError: If any result failed, listing their names.
        """
        if not self.passed:
            raise GradientCheckError([r.name for r in self.failures])

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "max_error": self.max_error,
            "results": [
                {
                    "name": r.name,
                    "shape": list(r.shape),
                    "error": r.error,
                    "passed": r.passed,
                }
                for r in self.results
            ],
        }


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """‖a − n‖ / max(‖a‖ + ‖n‖, 1e-6)."""
    diff = np.linalg.norm(analytic - numeric)
    scale = max(np.linalg.norm(analytic) + np.linalg.norm(numeric), 1e-6)
    return float(diff / scale)


def check_gradients(
    fn: LossFunction,
    inputs: Mapping[str, ArrayLike],
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    max_entries: Optional[int] = None,
    seed: int = 0,
) -> GradCheckReport:
    """
    Compare analytic and central-difference gradients of a scalar loss.

    ``fn`` receives a mapping of the same names to Tensors and must
    return a scalar Tensor. It is called once under a record for the
    analytic pass and twice per checked entry without one, so any
    randomness inside it must be rebuilt from fixed seeds on every call.

    Args:
        fn: Loss function of the named inputs.
        inputs: Initial values, one array per name.
        step: Central-difference step h.
        tolerance: Relative error that counts as a failure.
        max_entries: If set, check only this many randomly chosen entries
            per input (all entries when the input is smaller).
        seed: Seed for choosing entries.

    Returns:
        GradCheckReport with one result per input.

    Raises:
        ContractError: If fn does not return a scalar.
    """
    with using_precision("double"):
        base = {name: np.array(value, dtype=np.float64) for name, value in inputs.items()}

        leaves = {name: Tensor(array, requires_grad=True, name=name) for name, array in base.items()}
        with ComputationRecord():
            loss = fn(leaves)
            grads = backward(loss)
        analytic = {name: np.asarray(grads[t], dtype=np.float64) for name, t in leaves.items()}

        def evaluate(name: str, array: np.ndarray) -> float:
            args = {
                other: Tensor(array if other == name else base[other])
                for other in base
            }
            value = fn(args)
            if value.size != 1:
                raise ContractError(f"gradient check needs a scalar loss, got {value.shape}")
            return value.item()

        chooser = np.random.default_rng(seed)
        report = GradCheckReport()
        for name, array in base.items():
            flat_indices = np.arange(array.size)
            if max_entries is not None and array.size > max_entries:
                flat_indices = np.sort(chooser.choice(array.size, size=max_entries, replace=False))

            numeric = np.zeros(len(flat_indices))
            for i, flat in enumerate(flat_indices):
                index = np.unravel_index(flat, array.shape)
                plus = array.copy()
                plus[index] += step
                minus = array.copy()
                minus[index] -= step
                numeric[i] = (evaluate(name, plus) - evaluate(name, minus)) / (2.0 * step)

            picked = analytic[name].reshape(-1)[flat_indices]
            result = GradCheckResult(
                name=name,
                shape=array.shape,
                error=relative_error(picked, numeric),
                tolerance=tolerance,
                entries_checked=len(flat_indices),
            )
            logger.debug("%s", result)
            report.results.append(result)
    return report
