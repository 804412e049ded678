"""Feature extractor, hierarchical supervision module and answer head."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..autodiff.losses import EPSILON
from ..autodiff.tensor import ShapeError, Tape, Tensor
from ..config import MaskMode, ModelConfig
from .params import PHASES, Params, check_params


@dataclass(frozen=True)
class PhaseFeatures:
    """F_base (n x d_base) and the three phase features (n x d_phase each)."""

    base: Tensor
    cg: Tensor
    fg: Tensor
    if_: Tensor


@dataclass(frozen=True)
class MaskPredictions:
    """Per-object selection probabilities, one vector of length n per phase."""

    cg: Tensor
    fg: Tensor
    if_: Tensor

    def phase(self, name: str) -> Tensor:
        return {"cg": self.cg, "fg": self.fg, "if": self.if_}[name]


@dataclass(frozen=True)
class ForwardResult:
    features: PhaseFeatures
    masks: MaskPredictions
    reweighted: Tensor
    attention: Tensor
    logits: Tensor


TensorParams = Mapping[str, Tensor]


def _linear(tape: Tape, x: Tensor, p: TensorParams, name: str) -> Tensor:
    out = tape.matmul(x, p[f"{name}.w"])
    bias = p.get(f"{name}.b")
    return out if bias is None else tape.add(out, bias)


def _mlp(tape: Tape, x: Tensor, p: TensorParams, prefix: str, depth: int) -> Tensor:
    for k in range(depth):
        x = _linear(tape, x, p, f"{prefix}.{k}")
        if k < depth - 1:
            x = tape.relu(x)
    return x


def _check_width(x: Tensor, width: int, what: str) -> None:
    if x.ndim != 2 or x.shape[1] != width:
        raise ShapeError(f"{what}: expected shape (n, {width}), got {x.shape}")
    if x.shape[0] < 1:
        raise ShapeError(f"{what}: needs at least one row")


def pre_hsm_extract(tape: Tape, tokens: Tensor, p: TensorParams, cfg: ModelConfig) -> Tensor:
    """Per-object MLP from object tokens to F_base (relu between layers, linear last)."""
    _check_width(tokens, cfg.d_obj, "object tokens")
    return _mlp(tape, tokens, p, "extractor", cfg.extractor_depth)


def _mask_head(tape: Tape, feature: Tensor, p: TensorParams, phase: str) -> Tensor:
    """Selection probabilities clamped to [EPSILON, 1 - EPSILON]."""
    logits = _linear(tape, feature, p, f"mask.{phase}")
    probs = tape.clip(tape.sigmoid(logits), EPSILON, 1.0 - EPSILON)
    return tape.reshape(probs, (feature.shape[0],))


def hsm_forward(
    tape: Tape, f_base: Tensor, p: TensorParams, cfg: ModelConfig
) -> tuple[PhaseFeatures, MaskPredictions]:
    """Run coarse grounding, fine grounding and inference strictly in order."""
    _check_width(f_base, cfg.d_base, "F_base")
    f_cg = _mlp(tape, f_base, p, "hsm.cg", cfg.phase_depth)
    f_fg = _mlp(tape, tape.concat([f_base, f_cg]), p, "hsm.fg", cfg.phase_depth)
    f_if = _mlp(tape, tape.concat([f_base, f_fg]), p, "hsm.if", cfg.phase_depth)
    features = PhaseFeatures(base=f_base, cg=f_cg, fg=f_fg, if_=f_if)
    masks = MaskPredictions(
        cg=_mask_head(tape, f_cg, p, "cg"),
        fg=_mask_head(tape, f_fg, p, "fg"),
        if_=_mask_head(tape, f_if, p, "if"),
    )
    return features, masks


def reweight_tokens(tape: Tape, tokens: Tensor, weights: Tensor) -> Tensor:
    """Scale row i of ``tokens`` by ``weights[i] + 1``."""
    if weights.ndim != 1 or tokens.ndim != 2 or weights.shape[0] != tokens.shape[0]:
        raise ShapeError(f"reweight: {weights.shape} weights for tokens of shape {tokens.shape}")
    factor = tape.reshape(tape.affine(weights, 1.0, 1.0), (weights.shape[0], 1))
    return tape.mul(tokens, factor)


def answer_head(
    tape: Tape, tokens: Tensor, text: Tensor, p: TensorParams, cfg: ModelConfig
) -> tuple[Tensor, Tensor]:
    """Pooled-text query attends over the tokens; returns ``(logits (V,), attention (1, n))``."""
    _check_width(tokens, cfg.d_obj, "reweighted tokens")
    _check_width(text, cfg.d_text, "text tokens")
    pooled_text = tape.mean(text, axis=0)
    query = _linear(tape, pooled_text, p, "answer.query")
    scores = tape.affine(tape.matmul(query, tape.transpose(tokens)), 1.0 / np.sqrt(cfg.d_obj))
    attention = tape.softmax(scores)
    attended = tape.matmul(attention, tokens)
    pooled_tokens = tape.mean(tokens, axis=0)
    hidden = tape.relu(_linear(tape, tape.concat([attended, pooled_tokens, pooled_text]), p, "answer.hidden"))
    logits = _linear(tape, hidden, p, "answer.out")
    return tape.row_select(logits, 0), attention


def mask_for_head(tape: Tape, masks: MaskPredictions, cfg: ModelConfig) -> Tensor:
    """The inference mask as consumed by the answer head (soft or thresholded)."""
    if cfg.mask_mode is MaskMode.HARD:
        return tape.constant((masks.if_.data >= cfg.threshold).astype(np.float64))
    return masks.if_


def forward(
    tape: Tape, tokens: Tensor, text: Tensor, p: TensorParams, cfg: ModelConfig
) -> ForwardResult:
    features, masks = hsm_forward(tape, pre_hsm_extract(tape, tokens, p, cfg), p, cfg)
    reweighted = reweight_tokens(tape, tokens, mask_for_head(tape, masks, cfg))
    logits, attention = answer_head(tape, reweighted, text, p, cfg)
    return ForwardResult(
        features=features, masks=masks, reweighted=reweighted, attention=attention, logits=logits
    )


@dataclass(frozen=True)
class Prediction:
    """Inference output for one question, plain arrays."""

    logits: np.ndarray
    masks: dict[str, np.ndarray]


class HCNModel:
    """Model configuration plus its parameter arrays."""

    def __init__(self, cfg: ModelConfig, params: Params):
        check_params(cfg, params)
        self.cfg = cfg
        self.params = params

    def bind(self, tape: Tape, *, trainable: bool = True) -> dict[str, Tensor]:
        """Wrap every parameter array as a tensor for one tape."""
        make = tape.parameter if trainable else tape.constant
        return {name: make(value, name=name) for name, value in self.params.items()}

    def forward(self, tape: Tape, tokens: np.ndarray, text: np.ndarray, p: TensorParams) -> ForwardResult:
        return forward(tape, tape.constant(tokens), tape.constant(text), p, self.cfg)

    def predict(self, tokens: np.ndarray, text: np.ndarray) -> Prediction:
        tape = Tape()
        result = self.forward(tape, tokens, text, self.bind(tape, trainable=False))
        return Prediction(
            logits=result.logits.data.copy(),
            masks={phase: result.masks.phase(phase).data.copy() for phase in PHASES},
        )


__all__ = [
    "PhaseFeatures",
    "MaskPredictions",
    "ForwardResult",
    "Prediction",
    "HCNModel",
    "pre_hsm_extract",
    "hsm_forward",
    "reweight_tokens",
    "answer_head",
    "mask_for_head",
    "forward",
]
