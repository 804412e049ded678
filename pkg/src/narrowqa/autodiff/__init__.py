"""Small reverse-mode differentiation engine, losses and optimizers."""

from __future__ import annotations

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import GradcheckReport, gradcheck
from .losses import DegenerateClassError, bce, cross_entropy, mask_loss, weighted_bce
from .optim import OptimizerState, adam_step, optimizer_step, sgd_step
from .tensor import ShapeError, Tape, TapeError, Tensor

__all__ = [
    "Tensor",
    "Tape",
    "ShapeError",
    "TapeError",
    "DegenerateClassError",
    "weighted_bce",
    "bce",
    "mask_loss",
    "cross_entropy",
    "OptimizerState",
    "sgd_step",
    "adam_step",
    "optimizer_step",
    "GradcheckReport",
    "gradcheck",
    "CheckpointError",
    "save_checkpoint",
    "load_checkpoint",
]
