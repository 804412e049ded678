"""Supervised model: extractor, hierarchical mask phases, answer head."""

from __future__ import annotations

from .flops import FlopsReport, count_flops, linear_flops
from .network import (
    ForwardResult,
    HCNModel,
    MaskPredictions,
    PhaseFeatures,
    Prediction,
    answer_head,
    forward,
    hsm_forward,
    pre_hsm_extract,
    reweight_tokens,
)
from .params import PHASES, init_params

__all__ = [
    "PHASES",
    "init_params",
    "HCNModel",
    "PhaseFeatures",
    "MaskPredictions",
    "ForwardResult",
    "Prediction",
    "pre_hsm_extract",
    "hsm_forward",
    "reweight_tokens",
    "answer_head",
    "forward",
    "FlopsReport",
    "count_flops",
    "linear_flops",
]
