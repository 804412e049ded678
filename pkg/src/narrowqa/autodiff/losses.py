"""Mask and answer losses built from tape primitives."""

from __future__ import annotations

import logging

import numpy as np

from .tensor import ShapeError, Tape, Tensor

_logger = logging.getLogger(__name__)

EPSILON = 1e-7


class DegenerateClassError(ValueError):
    """Raised when a class-balanced BCE sees only one class."""


def _prepare(tape: Tape, pred: Tensor, label: np.ndarray) -> tuple[Tensor, np.ndarray]:
    label = np.asarray(label, dtype=np.float64)
    if pred.ndim != 1 or label.shape != pred.shape:
        raise ShapeError(f"mask loss: prediction shape {pred.shape} vs label shape {label.shape}")
    if pred.shape[0] < 1:
        raise ShapeError("mask loss: empty mask")
    return tape.clip(pred, EPSILON, 1.0 - EPSILON), label


def weighted_bce(tape: Tape, pred: Tensor, label: np.ndarray) -> Tensor:
    """Class-balanced binary cross-entropy over one object mask.

    ``-((c0 + c1) / N) * sum(M/c1 * log p + (1 - M)/c0 * log(1 - p))`` where
    c1 and c0 count selected and unselected objects. Probabilities are clamped
    to ``[EPSILON, 1 - EPSILON]``.
    """
    p, m = _prepare(tape, pred, label)
    n = m.shape[0]
    c1 = float(m.sum())
    c0 = n - c1
    if c1 == 0 or c0 == 0:
        raise DegenerateClassError(f"mask has c0={c0:g}, c1={c1:g}; both classes are required")
    positive = tape.mul(tape.log(p), tape.constant(m / c1))
    negative = tape.mul(tape.log(tape.affine(p, -1.0, 1.0)), tape.constant((1.0 - m) / c0))
    return tape.affine(tape.sum(tape.add(positive, negative)), -(c0 + c1) / n)


def bce(tape: Tape, pred: Tensor, label: np.ndarray) -> Tensor:
    """Unweighted mean binary cross-entropy."""
    p, m = _prepare(tape, pred, label)
    positive = tape.mul(tape.log(p), tape.constant(m))
    negative = tape.mul(tape.log(tape.affine(p, -1.0, 1.0)), tape.constant(1.0 - m))
    return tape.affine(tape.mean(tape.add(positive, negative)), -1.0)


def mask_loss(tape: Tape, pred: Tensor, label: np.ndarray) -> Tensor:
    """``weighted_bce``, falling back to ``bce`` when one class is absent."""
    try:
        return weighted_bce(tape, pred, label)
    except DegenerateClassError:
        _logger.debug("single-class mask of %d objects; using unweighted BCE", pred.shape[0])
        return bce(tape, pred, label)


def cross_entropy(tape: Tape, logits: Tensor, label: int) -> Tensor:
    """``-log softmax(logits)[label]`` for a single logit vector."""
    if logits.ndim != 1 or logits.shape[0] < 1:
        raise ShapeError(f"cross_entropy: expected logits of shape (V,), got {logits.shape}")
    if not 0 <= label < logits.shape[0]:
        raise IndexError(f"cross_entropy: label {label} out of range for {logits.shape[0]} classes")
    return tape.affine(tape.row_select(tape.log_softmax(logits), label), -1.0)


__all__ = ["EPSILON", "DegenerateClassError", "weighted_bce", "bce", "mask_loss", "cross_entropy"]
