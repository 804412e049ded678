"""Losses, synthetic data and the training loop."""

from __future__ import annotations

from .dataset import Sample, build_samples, is_validation, load_dataset, save_dataset, split_samples
from .loop import EpochLog, FitResult, TrainingDivergedError, fit, write_training_log
from .objectives import combine_phase_losses, hsm_loss, phase_targets, total_loss
from .synthetic import Featurizer, SyntheticDataset, make_synthetic_dataset

__all__ = [
    "hsm_loss",
    "total_loss",
    "combine_phase_losses",
    "phase_targets",
    "Featurizer",
    "SyntheticDataset",
    "make_synthetic_dataset",
    "Sample",
    "build_samples",
    "is_validation",
    "split_samples",
    "save_dataset",
    "load_dataset",
    "EpochLog",
    "FitResult",
    "TrainingDivergedError",
    "fit",
    "write_training_log",
]
