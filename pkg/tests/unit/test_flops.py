from __future__ import annotations

import math

import pytest

from narrowqa.config import ModelConfig
from narrowqa.model.flops import count_flops, linear_flops

CFG = ModelConfig(d_obj=5, d_text=4, d_base=8, d_phase=8, d_hidden=6, answer_vocab_size=7)


def test_linear_layer_closed_form() -> None:
    assert linear_flops(4, 8, 10) == 640


def test_hsm_total_is_hand_summed() -> None:
    n = 6
    report = count_flops(CFG, n_objects=n, t_text=3)
    # cg: 8->8, 8->8, head 8->1; fg and if: 16->8, 8->8, head 8->1.
    cg = 2 * n * (8 * 8 + 8 * 8 + 8 * 1)
    later = 2 * n * (16 * 8 + 8 * 8 + 8 * 1)
    assert report.hsm_total == cg + 2 * later
    assert report.layers["hsm.fg.0"] == 2 * 16 * 8 * n
    assert report.layers["extractor.0"] == 2 * 5 * 8 * n
    assert report.model_total == sum(report.layers.values())
    assert 0.0 < report.hsm_share < 1.0


def test_ratio_against_backbone_budget() -> None:
    assert count_flops(CFG, 6, 3).ratio == 0.0
    report = count_flops(CFG, 6, 3, backbone_flops=1e12)
    assert report.ratio == pytest.approx(report.hsm_total / 1e12)
    assert report.ratio < 1e-6
    assert report.to_dict()["backbone_flops"] == 1e12
    assert count_flops(CFG, 6, 3, backbone_flops=math.inf).to_dict()["backbone_flops"] is None


def test_invalid_sizes() -> None:
    with pytest.raises(ValueError):
        count_flops(CFG, 0, 3)


def test_text_rows_are_counted() -> None:
    short = count_flops(CFG, n_objects=6, t_text=3)
    long = count_flops(CFG, n_objects=6, t_text=5)
    assert short.layers["answer.pool_text"] == 3 * 4
    assert long.model_total - short.model_total == 2 * 4
    assert long.hsm_total == short.hsm_total
    assert short.layers["answer.pool_tokens"] == 6 * 5
