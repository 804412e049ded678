from __future__ import annotations

import math

import numpy as np
import pytest

from narrowqa.autodiff.gradcheck import gradcheck
from narrowqa.autodiff.losses import (
    DegenerateClassError,
    bce,
    cross_entropy,
    mask_loss,
    weighted_bce,
)
from narrowqa.autodiff.tensor import ShapeError, Tape


def wbce(pred: list[float] | np.ndarray, label: list[float] | np.ndarray) -> float:
    tape = Tape()
    return weighted_bce(tape, tape.constant(pred), np.asarray(label, dtype=float)).item()


def mean_bce_reference(pred: np.ndarray, label: np.ndarray) -> float:
    return float(-np.mean(label * np.log(pred) + (1 - label) * np.log(1 - pred)))


def test_weighted_bce_golden_value() -> None:
    assert wbce([0.5, 0.5], [1.0, 0.0]) == pytest.approx(2.0 * math.log(2.0), abs=1e-9)


def test_weighted_bce_perfect_prediction_is_near_zero() -> None:
    assert wbce([1.0, 0.0, 1.0], [1.0, 0.0, 1.0]) < 1e-5


def test_balanced_labels_double_the_mean_bce() -> None:
    rng = np.random.default_rng(42)
    for _ in range(100):
        half = int(rng.integers(1, 6))
        label = np.array([1.0] * half + [0.0] * half)
        rng.shuffle(label)
        pred = rng.uniform(0.01, 0.99, size=2 * half)
        assert wbce(pred, label) == pytest.approx(2.0 * mean_bce_reference(pred, label), abs=1e-9)


def test_weighted_bce_symmetries() -> None:
    rng = np.random.default_rng(3)
    pred = rng.uniform(0.05, 0.95, size=7)
    label = np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0])
    value = wbce(pred, label)

    order = rng.permutation(7)
    assert wbce(pred[order], label[order]) == pytest.approx(value, abs=1e-12)
    assert wbce(1.0 - pred, 1.0 - label) == pytest.approx(value, abs=1e-12)


def test_degenerate_classes() -> None:
    with pytest.raises(DegenerateClassError):
        wbce([0.3, 0.4], [1.0, 1.0])

    tape = Tape()
    pred = np.array([0.3, 0.4])
    fallback = mask_loss(tape, tape.constant(pred), np.ones(2)).item()
    assert fallback == pytest.approx(mean_bce_reference(pred, np.ones(2)), abs=1e-12)


def test_unweighted_bce() -> None:
    tape = Tape()
    pred = np.array([0.2, 0.9, 0.6])
    label = np.array([0.0, 1.0, 1.0])
    assert bce(tape, tape.constant(pred), label).item() == pytest.approx(mean_bce_reference(pred, label))


def test_mask_shape_mismatch() -> None:
    tape = Tape()
    with pytest.raises(ShapeError):
        weighted_bce(tape, tape.constant([0.5, 0.5]), np.array([1.0, 0.0, 1.0]))


def test_cross_entropy_uniform_logits() -> None:
    tape = Tape()
    for label in range(4):
        assert cross_entropy(tape, tape.constant(np.zeros(4)), label).item() == pytest.approx(math.log(4))


def test_cross_entropy_dominant_logit() -> None:
    tape = Tape()
    assert cross_entropy(tape, tape.constant([50.0, 0.0, 0.0]), 0).item() < 1e-12


def test_cross_entropy_matches_log_sum_exp() -> None:
    rng = np.random.default_rng(8)
    for _ in range(20):
        logits = rng.normal(0.0, 5.0, size=int(rng.integers(1, 12)))
        label = int(rng.integers(len(logits)))
        peak = logits.max()
        expected = -(logits[label] - (peak + math.log(sum(math.exp(v - peak) for v in logits))))
        tape = Tape()
        value = cross_entropy(tape, tape.constant(logits), label).item()
        assert value == pytest.approx(expected, abs=1e-12)
        assert value >= 0.0


def test_cross_entropy_label_out_of_range() -> None:
    tape = Tape()
    with pytest.raises(IndexError):
        cross_entropy(tape, tape.constant(np.zeros(3)), 3)


def test_loss_gradients_match_finite_differences() -> None:
    rng = np.random.default_rng(1)
    label = np.array([1.0, 0.0, 0.0, 1.0, 0.0])

    def build(tape, params):
        mask = weighted_bce(tape, tape.sigmoid(params["z"]), label)
        return tape.add(mask, cross_entropy(tape, params["logits"], 2))

    report = gradcheck(build, {"z": rng.normal(size=5), "logits": rng.normal(size=6)})
    assert report.passed, report.to_dict()
