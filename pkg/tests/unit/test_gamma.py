from __future__ import annotations

import numpy as np
import pytest

from narrowqa.evaluation.gamma import (
    ZeroDenominatorError,
    format_gamma_table,
    gamma_table,
    improvement_ratio,
)


@pytest.mark.parametrize(
    ("none", "object_ids", "mask", "expected"),
    [
        (22.05, 22.20, 22.65, 4.00),
        (22.05, 22.20, 23.72, 11.13),
        (10.0, 12.0, 10.0, 0.0),
    ],
)
def test_reported_ratios(none: float, object_ids: float, mask: float, expected: float) -> None:
    assert round(improvement_ratio(none, object_ids, mask), 2) == pytest.approx(expected)


def test_object_id_row_scores_one() -> None:
    assert improvement_ratio(3.0, 7.5, 7.5) == pytest.approx(1.0)


def test_tied_reference_rows() -> None:
    with pytest.raises(ZeroDenominatorError):
        improvement_ratio(22.05, 22.05, 23.0)


def test_invariant_under_affine_rescaling() -> None:
    rng = np.random.default_rng(0)
    for _ in range(100):
        none, object_ids, mask = rng.uniform(0.0, 50.0, size=3)
        if abs(object_ids - none) < 1e-3:
            continue
        scale, shift = rng.uniform(0.1, 10.0), rng.uniform(-20.0, 20.0)
        assert improvement_ratio(
            scale * none + shift, scale * object_ids + shift, scale * mask + shift
        ) == pytest.approx(improvement_ratio(none, object_ids, mask), rel=1e-9)


def test_gamma_table() -> None:
    scores = {
        "none": {"em1": 22.05, "bleu1": 30.0},
        "object_ids": {"em1": 22.20, "bleu1": 30.0},
        "hcn": {"em1": 22.65, "bleu1": 31.0},
    }
    table = gamma_table(scores)
    assert list(table) == ["object_ids", "hcn"]
    assert table["hcn"]["em1"] == pytest.approx(4.0)
    assert table["hcn"]["bleu1"] is None

    text = format_gamma_table(table)
    lines = text.splitlines()
    assert lines[0].split() == ["annotation", "em1", "bleu1"]
    assert lines[2].split() == ["hcn", "4.00", "-"]

    with pytest.raises(KeyError):
        gamma_table({"none": {"em1": 1.0}})
