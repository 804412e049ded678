"""SGD and Adam updates over named parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .tensor import ShapeError

Params = dict[str, np.ndarray]


@dataclass
class OptimizerState:
    """Learning rate, step counter and Adam moment buffers.

    Attributes:
        kind: ``sgd`` or ``adam``
        lr: Learning rate
        step: Number of updates applied so far
        m: First-moment buffers keyed by parameter name (Adam only)
        v: Second-moment buffers keyed by parameter name (Adam only)
    """

    kind: str = "adam"
    lr: float = 0.003
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in {"sgd", "adam"}:
            raise ValueError(f"unknown optimizer '{self.kind}'")


def _check(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray]) -> None:
    for name, grad in grads.items():
        if name not in params:
            raise ShapeError(f"gradient for unknown parameter '{name}'")
        if np.shape(grad) != params[name].shape:
            raise ShapeError(
                f"parameter '{name}' has shape {params[name].shape}, gradient {np.shape(grad)}"
            )


def sgd_step(params: Params, grads: Mapping[str, np.ndarray], state: OptimizerState) -> Params:
    _check(params, grads)
    state.step += 1
    return {
        name: value - state.lr * grads[name] if name in grads else value
        for name, value in params.items()
    }


def adam_step(params: Params, grads: Mapping[str, np.ndarray], state: OptimizerState) -> Params:
    _check(params, grads)
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    updated: Params = {}
    for name, value in params.items():
        grad = grads.get(name)
        if grad is None:
            updated[name] = value
            continue
        m = state.m.get(name)
        v = state.v.get(name)
        if m is None or v is None:
            m = np.zeros_like(value)
            v = np.zeros_like(value)
        m = state.beta1 * m + (1.0 - state.beta1) * grad
        v = state.beta2 * v + (1.0 - state.beta2) * grad * grad
        state.m[name], state.v[name] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        updated[name] = value - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated


def optimizer_step(params: Params, grads: Mapping[str, np.ndarray], state: OptimizerState) -> Params:
    if state.kind == "sgd":
        return sgd_step(params, grads, state)
    return adam_step(params, grads, state)


def clip_grad_norm(grads: Mapping[str, np.ndarray], max_norm: float | None) -> dict[str, np.ndarray]:
    """Scale all gradients together so their global L2 norm is at most ``max_norm``."""
    clipped = dict(grads)
    if max_norm is None:
        return clipped
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if total > max_norm > 0:
        factor = max_norm / total
        clipped = {name: g * factor for name, g in grads.items()}
    return clipped


__all__ = ["Params", "OptimizerState", "sgd_step", "adam_step", "optimizer_step", "clip_grad_norm"]
