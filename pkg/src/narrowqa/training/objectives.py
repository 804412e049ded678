"""Loss assembly: hierarchical mask loss plus answer loss."""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ..autodiff.losses import cross_entropy, mask_loss
from ..autodiff.tensor import ShapeError, Tape, Tensor
from ..config import LossWeights, MaskSupervision, SupervisionFlags
from ..labels.masks import MaskTriple
from ..model.network import MaskPredictions
from ..model.params import PHASES


def phase_weight(weights: LossWeights, phase: str) -> float:
    return {"cg": weights.cg, "fg": weights.fg, "if": weights.if_}[phase]


def phase_enabled(flags: SupervisionFlags, phase: str) -> bool:
    return {"cg": flags.cg, "fg": flags.fg, "if": flags.if_}[phase]


_SINGLE_HEAD = {
    MaskSupervision.OBJECT_IDS: "if",
    MaskSupervision.BOI: "cg",
    MaskSupervision.OOI: "fg",
    MaskSupervision.OOT: "if",
}


def phase_targets(labels: MaskTriple, mode: MaskSupervision) -> dict[str, np.ndarray]:
    """Label vector per supervised phase.

    ``hierarchical`` supervises cg with BoI, fg with OoI and if with OoT.
    ``boi``, ``ooi`` and ``oot`` supervise only their own head. ``object_ids``
    supervises only the inference head with the annotated target ids.
    """
    single = _SINGLE_HEAD.get(mode)
    if single is not None:
        return {single: labels.phase(single)}
    return {phase: labels.phase(phase) for phase in PHASES}


def combine_phase_losses(
    tape: Tape, losses: Mapping[str, Tensor], weights: LossWeights, flags: SupervisionFlags
) -> Tensor:
    """``sum(lambda_p * L_p)`` over enabled phases that have a loss."""
    total: Tensor | None = None
    for phase in PHASES:
        if phase not in losses or not phase_enabled(flags, phase):
            continue
        term = tape.affine(losses[phase], phase_weight(weights, phase))
        total = term if total is None else tape.add(total, term)
    return total if total is not None else tape.constant(0.0)


def hsm_loss(
    tape: Tape,
    preds: MaskPredictions,
    targets: Mapping[str, np.ndarray],
    weights: LossWeights,
    flags: SupervisionFlags,
) -> tuple[Tensor, dict[str, float]]:
    """Weighted mask loss; disabled phases are never put on the tape.

    Returns the loss and the unweighted per-phase values (0 when disabled).
    """
    losses: dict[str, Tensor] = {}
    for phase, label in targets.items():
        pred = preds.phase(phase)
        if np.shape(label) != pred.shape:
            raise ShapeError(f"{phase} mask: prediction {pred.shape} vs label {np.shape(label)}")
        if phase_enabled(flags, phase):
            losses[phase] = mask_loss(tape, pred, label)
    components = {phase: (losses[phase].item() if phase in losses else 0.0) for phase in PHASES}
    return combine_phase_losses(tape, losses, weights, flags), components


def total_loss(tape: Tape, hsm: Tensor, answer: Tensor, weights: LossWeights) -> Tensor:
    return tape.add(hsm, tape.affine(answer, weights.ans))


def answer_loss(tape: Tape, logits: Tensor, answer_index: int) -> Tensor:
    return cross_entropy(tape, logits, answer_index)


__all__ = [
    "phase_weight",
    "phase_enabled",
    "phase_targets",
    "combine_phase_losses",
    "hsm_loss",
    "total_loss",
    "answer_loss",
]
