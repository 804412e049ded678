"""Reverse-mode differentiation over dense float64 arrays.

A :class:`Tape` records primitive applications in execution order; each
record keeps its inputs, its output and a pullback that maps the output
cotangent to one cotangent per input. ``Tape.backward`` replays the records
in reverse. Tapes are single-owner and there is no global state, so
independent tapes can run in parallel.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

_logger = logging.getLogger(__name__)

Pullback = Callable[[np.ndarray], Sequence["np.ndarray | None"]]


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible for a primitive."""


class TapeError(RuntimeError):
    """Raised for misuse of a tape (non-scalar loss, foreign tensor)."""


class Tensor:
    """A float64 array with an optional gradient buffer.

    Attributes:
        data: Value, always ``float64``; scalars are 0-d arrays
        requires_grad: Whether gradients flow into this tensor
        grad: Accumulated gradient after ``Tape.backward`` (same shape as data)
        name: Optional label used in error messages and gradcheck reports
    """

    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data: object, *, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single value, tensor has shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"


@dataclass(frozen=True)
class _Record:
    inputs: tuple[Tensor, ...]
    output: Tensor
    pullback: Pullback
    op: str


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` back down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Tape:
    """Ordered record of primitive applications."""

    def __init__(self) -> None:
        self._records: list[_Record] = []
        self._produced: set[int] = set()

    def __len__(self) -> int:
        return len(self._records)

    # -- construction -------------------------------------------------------

    @staticmethod
    def constant(data: object, name: str | None = None) -> Tensor:
        return Tensor(data, requires_grad=False, name=name)

    @staticmethod
    def parameter(data: object, name: str | None = None) -> Tensor:
        return Tensor(data, requires_grad=True, name=name)

    def apply(
        self, data: np.ndarray, inputs: Sequence[Tensor], pullback: Pullback, op: str = "custom"
    ) -> Tensor:
        """Create the output of a primitive and record it when gradients are needed.

        ``pullback`` receives the output cotangent and returns one cotangent
        (or None) per input, each shaped like that input.
        """
        inputs = tuple(inputs)
        out = Tensor(data, requires_grad=any(t.requires_grad for t in inputs))
        if out.requires_grad:
            self._records.append(_Record(inputs, out, pullback, op))
            self._produced.add(id(out))
        return out

    # -- primitives ---------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul: cannot multiply shapes {a.shape} and {b.shape}")
        av, bv = a.data, b.data
        return self.apply(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g), "matmul")

    def transpose(self, a: Tensor) -> Tensor:
        if a.ndim != 2:
            raise ShapeError(f"transpose: expected a matrix, got shape {a.shape}")
        return self.apply(a.data.T, (a,), lambda g: (g.T,), "transpose")

    def _broadcast(self, op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
        try:
            return np.broadcast_shapes(a.shape, b.shape)
        except ValueError as exc:
            raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from exc

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        self._broadcast("add", a, b)
        sa, sb = a.shape, b.shape
        return self.apply(
            a.data + b.data,
            (a, b),
            lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)),
            "add",
        )

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        self._broadcast("mul", a, b)
        av, bv = a.data, b.data
        return self.apply(
            av * bv,
            (a, b),
            lambda g: (_unbroadcast(g * bv, av.shape), _unbroadcast(g * av, bv.shape)),
            "mul",
        )

    def affine(self, a: Tensor, scale: float = 1.0, shift: float = 0.0) -> Tensor:
        """``scale * a + shift`` with constant scale and shift."""
        return self.apply(a.data * scale + shift, (a,), lambda g: (g * scale,), "affine")

    def clip(self, a: Tensor, low: float, high: float) -> Tensor:
        inside = (a.data >= low) & (a.data <= high)
        return self.apply(np.clip(a.data, low, high), (a,), lambda g: (g * inside,), "clip")

    def concat(self, tensors: Sequence[Tensor]) -> Tensor:
        """Concatenate along the last axis."""
        if not tensors:
            raise ShapeError("concat: no operands")
        lead = tensors[0].shape[:-1]
        for t in tensors:
            if t.ndim == 0 or t.shape[:-1] != lead:
                shapes = ", ".join(str(x.shape) for x in tensors)
                raise ShapeError(f"concat: leading dimensions differ across {shapes}")
        widths = [t.shape[-1] for t in tensors]
        splits = np.cumsum(widths)[:-1]
        return self.apply(
            np.concatenate([t.data for t in tensors], axis=-1),
            tuple(tensors),
            lambda g: tuple(np.split(g, splits, axis=-1)),
            "concat",
        )

    def reshape(self, a: Tensor, shape: tuple[int, ...]) -> Tensor:
        try:
            out = a.data.reshape(shape)
        except ValueError as exc:
            raise ShapeError(f"reshape: cannot view shape {a.shape} as {shape}") from exc
        original = a.shape
        return self.apply(out, (a,), lambda g: (g.reshape(original),), "reshape")

    def relu(self, a: Tensor) -> Tensor:
        positive = a.data > 0
        return self.apply(np.where(positive, a.data, 0.0), (a,), lambda g: (g * positive,), "relu")

    def sigmoid(self, a: Tensor) -> Tensor:
        s = _stable_sigmoid(a.data)
        return self.apply(s, (a,), lambda g: (g * s * (1.0 - s),), "sigmoid")

    def log(self, a: Tensor) -> Tensor:
        if np.any(a.data <= 0):
            raise ValueError("log: operand has non-positive entries; clamp first")
        av = a.data
        return self.apply(np.log(av), (a,), lambda g: (g / av,), "log")

    def sum(self, a: Tensor) -> Tensor:
        shape = a.shape
        return self.apply(
            np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),), "sum"
        )

    def mean(self, a: Tensor, axis: int | None = None) -> Tensor:
        """Mean over all entries (``axis=None``) or over rows (``axis=0``)."""
        if a.data.size == 0:
            raise ShapeError(f"mean: empty operand of shape {a.shape}")
        shape = a.shape
        if axis is None:
            count = a.data.size
            return self.apply(
                np.asarray(a.data.mean()),
                (a,),
                lambda g: (np.broadcast_to(g / count, shape).copy(),),
                "mean",
            )
        if axis != 0 or a.ndim < 1:
            raise ShapeError(f"mean: unsupported axis {axis} for shape {shape}")
        rows = shape[0]
        return self.apply(
            a.data.mean(axis=0, keepdims=True),
            (a,),
            lambda g: (np.broadcast_to(g / rows, shape).copy(),),
            "mean",
        )

    def softmax(self, a: Tensor) -> Tensor:
        """Softmax over the last axis."""
        if a.ndim == 0:
            raise ShapeError("softmax: scalar operand")
        shifted = a.data - a.data.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        s = e / e.sum(axis=-1, keepdims=True)

        def pullback(g: np.ndarray) -> tuple[np.ndarray]:
            return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

        return self.apply(s, (a,), pullback, "softmax")

    def log_softmax(self, a: Tensor) -> Tensor:
        if a.ndim == 0:
            raise ShapeError("log_softmax: scalar operand")
        shifted = a.data - a.data.max(axis=-1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
        out = shifted - lse
        s = np.exp(out)
        return self.apply(
            out, (a,), lambda g: (g - s * g.sum(axis=-1, keepdims=True),), "log_softmax"
        )

    def row_select(self, a: Tensor, index: int | Sequence[int] | np.ndarray) -> Tensor:
        """Select entries (1-d) or rows (2-d) along the first axis."""
        if a.ndim == 0:
            raise ShapeError("row_select: scalar operand")
        idx = np.asarray(index, dtype=np.int64)
        if np.any(idx < 0) or np.any(idx >= a.shape[0]):
            raise IndexError(f"row_select: index {index!r} out of range for {a.shape[0]} rows")
        shape = a.shape

        def pullback(g: np.ndarray) -> tuple[np.ndarray]:
            full = np.zeros(shape, dtype=np.float64)
            np.add.at(full, idx, g)
            return (full,)

        return self.apply(a.data[idx], (a,), pullback, "row_select")

    # -- differentiation ----------------------------------------------------

    def backward(self, loss: Tensor) -> list[Tensor]:
        """Accumulate d loss / d t into ``t.grad`` for every leaf reached.

        Returns the leaves that received a gradient, in first-use order.
        """
        if loss.data.shape != ():
            raise TapeError(f"backward needs a scalar loss, got shape {loss.shape}")
        if not loss.requires_grad:
            raise TapeError("loss does not depend on any tensor that requires grad")
        cotangents: dict[int, np.ndarray] = {id(loss): np.ones((), dtype=np.float64)}
        leaves: dict[int, Tensor] = {}
        if id(loss) not in self._produced:
            leaves[id(loss)] = loss

        for record in reversed(self._records):
            g = cotangents.pop(id(record.output), None)
            if g is None:
                continue
            grads = record.pullback(g)
            if len(grads) != len(record.inputs):
                raise TapeError(
                    f"{record.op}: pullback returned {len(grads)} cotangents "
                    f"for {len(record.inputs)} inputs"
                )
            for tensor, grad in zip(record.inputs, grads):
                if grad is None or not tensor.requires_grad:
                    continue
                grad = np.asarray(grad, dtype=np.float64)
                if grad.shape != tensor.shape:
                    raise ShapeError(
                        f"{record.op}: cotangent shape {grad.shape} != input shape {tensor.shape}"
                    )
                key = id(tensor)
                if key in cotangents:
                    cotangents[key] = cotangents[key] + grad
                else:
                    cotangents[key] = grad
                if key not in self._produced:
                    leaves.setdefault(key, tensor)

        reached: list[Tensor] = []
        for key, tensor in leaves.items():
            grad = cotangents.get(key)
            if grad is None:
                continue
            tensor.grad = grad.copy() if tensor.grad is None else tensor.grad + grad
            reached.append(tensor)
        _logger.debug("backward through %d records reached %d leaves", len(self._records), len(reached))
        return reached


__all__ = ["ShapeError", "TapeError", "Tensor", "Tape", "Pullback"]
