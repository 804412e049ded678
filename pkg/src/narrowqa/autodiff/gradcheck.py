"""Central finite-difference checks for tape gradients."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .tensor import Tape, Tensor

_logger = logging.getLogger(__name__)

GraphBuilder = Callable[[Tape, Mapping[str, Tensor]], Tensor]

# Gradients smaller than this are compared on an absolute scale.
RELATIVE_FLOOR = 1e-4


@dataclass(frozen=True)
class GradcheckEntry:
    name: str
    max_rel_error: float
    max_abs_error: float
    passed: bool


@dataclass(frozen=True)
class GradcheckReport:
    """Per-parameter comparison of analytic and numerical gradients."""

    entries: tuple[GradcheckEntry, ...]
    tolerance: float
    step: float

    @property
    def passed(self) -> bool:
        return all(entry.passed for entry in self.entries)

    @property
    def max_rel_error(self) -> float:
        return max((entry.max_rel_error for entry in self.entries), default=0.0)

    @property
    def failures(self) -> tuple[GradcheckEntry, ...]:
        return tuple(entry for entry in self.entries if not entry.passed)

    def to_dict(self) -> dict[str, object]:
        return {
            "passed": self.passed,
            "tolerance": self.tolerance,
            "step": self.step,
            "max_rel_error": self.max_rel_error,
            "parameters": {
                entry.name: {
                    "max_rel_error": entry.max_rel_error,
                    "max_abs_error": entry.max_abs_error,
                    "passed": entry.passed,
                }
                for entry in self.entries
            },
        }


def _evaluate(build: GraphBuilder, values: Mapping[str, np.ndarray]) -> float:
    tape = Tape()
    tensors = {name: Tensor(value, requires_grad=False, name=name) for name, value in values.items()}
    return build(tape, tensors).item()


def analytic_gradients(build: GraphBuilder, inputs: Mapping[str, np.ndarray]) -> dict[str, np.ndarray]:
    tape = Tape()
    tensors = {name: tape.parameter(value, name=name) for name, value in inputs.items()}
    loss = build(tape, tensors)
    tape.backward(loss)
    return {
        name: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for name, t in tensors.items()
    }


def gradcheck(
    build: GraphBuilder,
    inputs: Mapping[str, np.ndarray],
    *,
    step: float = 1e-5,
    tolerance: float = 1e-4,
) -> GradcheckReport:
    """Compare tape gradients of ``build`` against central differences.

    ``build`` must be pure: it receives a fresh tape and one tensor per
    input name and returns a scalar loss.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    base = {name: np.array(value, dtype=np.float64) for name, value in inputs.items()}
    analytic = analytic_gradients(build, base)

    entries: list[GradcheckEntry] = []
    for name, value in base.items():
        numeric = np.zeros_like(value)
        flat = numeric.reshape(-1)
        for position in range(value.size):
            shifted = dict(base)
            plus = value.copy()
            plus.reshape(-1)[position] += step
            minus = value.copy()
            minus.reshape(-1)[position] -= step
            shifted[name] = plus
            f_plus = _evaluate(build, shifted)
            shifted[name] = minus
            f_minus = _evaluate(build, shifted)
            flat[position] = (f_plus - f_minus) / (2.0 * step)

        abs_error = np.abs(analytic[name] - numeric)
        scale = np.maximum(np.maximum(np.abs(analytic[name]), np.abs(numeric)), RELATIVE_FLOOR)
        rel = float((abs_error / scale).max()) if value.size else 0.0
        entries.append(
            GradcheckEntry(
                name=name,
                max_rel_error=rel,
                max_abs_error=float(abs_error.max()) if value.size else 0.0,
                passed=rel < tolerance,
            )
        )
        _logger.debug("gradcheck %s: max rel error %.3e", name, rel)
    return GradcheckReport(entries=tuple(entries), tolerance=tolerance, step=step)


__all__ = ["GraphBuilder", "GradcheckEntry", "GradcheckReport", "analytic_gradients", "gradcheck"]
