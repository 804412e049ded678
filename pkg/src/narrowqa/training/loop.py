"""Deterministic minibatch training loop."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..autodiff.optim import OptimizerState, clip_grad_norm, optimizer_step
from ..autodiff.gradcheck import GradcheckReport, GraphBuilder, gradcheck
from ..autodiff.tensor import Tape, Tensor
from ..config import LabelGenConfig, ModelConfig, SyntheticSpec, TrainConfig
from ..model.network import HCNModel, forward
from ..model.params import PHASES, Params, init_params
from ..progress import ProgressTracker
from .dataset import Sample, build_samples, split_samples
from .objectives import answer_loss, hsm_loss, phase_targets, total_loss
from .synthetic import Featurizer, SyntheticDataset, make_synthetic_dataset

_logger = logging.getLogger(__name__)


class TrainingDivergedError(RuntimeError):
    """Raised when a loss becomes NaN or infinite."""


@dataclass(frozen=True)
class EpochLog:
    """Mean losses over the training questions of one epoch."""

    epoch: int
    loss_total: float
    loss_cg: float
    loss_fg: float
    loss_if: float
    loss_ans: float
    val_em1: float

    def to_dict(self) -> dict[str, float | int]:
        return asdict(self)


@dataclass
class FitResult:
    """Best model (by validation EM@1), its epoch and the full epoch log."""

    model: HCNModel
    best_epoch: int
    best_val_em1: float
    log: list[EpochLog] = field(default_factory=list)
    final_params: Params = field(default_factory=dict)


@dataclass(frozen=True)
class SampleStep:
    grads: dict[str, np.ndarray]
    losses: dict[str, float]


def _sample_loss(
    tape: Tape, model_cfg: ModelConfig, params: Mapping[str, Tensor], sample: Sample, cfg: TrainConfig
) -> tuple[Tensor, dict[str, float]]:
    result = forward(tape, tape.constant(sample.tokens), tape.constant(sample.text), params, model_cfg)
    targets = phase_targets(sample.labels, cfg.mask_supervision)
    hsm, components = hsm_loss(tape, result.masks, targets, cfg.weights, cfg.flags)
    ans = answer_loss(tape, result.logits, sample.answer_index)
    loss = total_loss(tape, hsm, ans, cfg.weights)
    return loss, {"total": loss.item(), "ans": ans.item(), **components}


def loss_graph(model_cfg: ModelConfig, sample: Sample, cfg: TrainConfig) -> GraphBuilder:
    """The training loss of one sample as a function of the model parameters."""

    def build(tape: Tape, params: Mapping[str, Tensor]) -> Tensor:
        return _sample_loss(tape, model_cfg, params, sample, cfg)[0]

    return build


def sample_step(model: HCNModel, sample: Sample, cfg: TrainConfig) -> SampleStep:
    """Forward and backward for one question on its own tape."""
    tape = Tape()
    params = model.bind(tape)
    loss, losses = _sample_loss(tape, model.cfg, params, sample, cfg)
    if not all(math.isfinite(v) for v in losses.values()):
        raise TrainingDivergedError(
            f"non-finite loss on {sample.question.question_id}: "
            + ", ".join(f"{k}={v:.6g}" for k, v in losses.items())
        )
    tape.backward(loss)
    grads = {
        name: (t.grad if t.grad is not None else np.zeros_like(t.data))
        for name, t in params.items()
    }
    return SampleStep(grads=grads, losses=losses)


def predict_index(model: HCNModel, sample: Sample) -> int:
    # argmax keeps the lowest vocabulary index on ties.
    return int(np.argmax(model.predict(sample.tokens, sample.text).logits))


def exact_match_at_1(model: HCNModel, samples: Sequence[Sample]) -> float:
    if not samples:
        return 0.0
    hits = sum(predict_index(model, sample) == sample.answer_index for sample in samples)
    return hits / len(samples)


def resolve_model_config(cfg: ModelConfig, data: SyntheticDataset) -> ModelConfig:
    featurizer = Featurizer(data.spec)
    return cfg.resolved(
        d_obj=featurizer.d_obj, d_text=featurizer.d_text, answer_vocab_size=len(data.vocab)
    )


def fit(
    cfg: TrainConfig,
    data: SyntheticDataset,
    *,
    samples: Sequence[Sample] | None = None,
    progress: bool = False,
) -> FitResult:
    """Train on ``data`` and keep the parameters with the best validation EM@1.

    Questions whose id hashes into the validation bucket are held out. A
    corpus with no training questions trains on everything; one with no
    validation questions scores EM@1 on the training questions instead.
    """
    if samples is None:
        samples = build_samples(data, cfg.labelgen)
    if not samples:
        raise ValueError("no training data")
    train, val = split_samples(samples)
    if not train:
        train = list(samples)
    if not val:
        _logger.warning("No validation questions; scoring EM@1 on the training questions")
        val = train

    model_cfg = resolve_model_config(cfg.model, data)
    params = init_params(model_cfg, cfg.seed)
    state = OptimizerState(
        kind=cfg.optimizer, lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps
    )
    rng = np.random.default_rng(cfg.seed)
    _logger.info(
        "Training %s on %d questions (%d held out), %d epochs, %s lr=%g",
        cfg.flags.label, len(train), len(val) if val is not train else 0,
        cfg.epochs, cfg.optimizer, cfg.lr,
    )

    tracker = ProgressTracker(cfg.epochs) if progress else None
    log: list[EpochLog] = []
    best_params: Params = {name: value.copy() for name, value in params.items()}
    best_epoch, best_em = 0, -1.0

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train))
        sums = {key: 0.0 for key in ("total", "ans", *PHASES)}
        for start in range(0, len(order), cfg.batch_size):
            batch = [train[int(i)] for i in order[start : start + cfg.batch_size]]
            model = HCNModel(model_cfg, params)
            accumulated: dict[str, np.ndarray] = {}
            for sample in batch:
                try:
                    step = sample_step(model, sample, cfg)
                except TrainingDivergedError as exc:
                    raise TrainingDivergedError(f"epoch {epoch}: {exc}") from exc
                for name, grad in step.grads.items():
                    accumulated[name] = accumulated[name] + grad if name in accumulated else grad.copy()
                for key in sums:
                    sums[key] += step.losses[key]
            grads = {name: grad / len(batch) for name, grad in accumulated.items()}
            params = optimizer_step(params, clip_grad_norm(grads, cfg.grad_clip), state)

        model = HCNModel(model_cfg, params)
        val_em1 = exact_match_at_1(model, val)
        count = len(train)
        entry = EpochLog(
            epoch=epoch,
            loss_total=sums["total"] / count,
            loss_cg=sums["cg"] / count,
            loss_fg=sums["fg"] / count,
            loss_if=sums["if"] / count,
            loss_ans=sums["ans"] / count,
            val_em1=val_em1,
        )
        log.append(entry)
        if val_em1 > best_em:
            best_em, best_epoch = val_em1, epoch
            best_params = {name: value.copy() for name, value in params.items()}
        if tracker is not None:
            tracker.advance(
                _logger,
                f"epoch {epoch}: loss {entry.loss_total:.4f} val EM@1 {val_em1:.3f}",
                absolute=epoch,
            )
        else:
            _logger.debug("epoch %d: %s", epoch, entry)

    return FitResult(
        model=HCNModel(model_cfg, best_params),
        best_epoch=best_epoch,
        best_val_em1=best_em,
        log=log,
        final_params=params,
    )


def write_training_log(log: Sequence[EpochLog], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for entry in log:
            fh.write(json.dumps(entry.to_dict()) + "\n")


def toy_gradcheck(
    seed: int = 0,
    n_objects: int = 6,
    *,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    train_cfg: TrainConfig | None = None,
) -> GradcheckReport:
    """Finite-difference check of the full training loss on one small synthetic scene."""
    spec = SyntheticSpec(n_scenes=1, objects_min=n_objects, objects_max=n_objects, seed=seed)
    data = make_synthetic_dataset(spec)
    cfg = train_cfg or TrainConfig(seed=seed)
    sample = build_samples(data, LabelGenConfig())[0]
    model_cfg = resolve_model_config(ModelConfig(d_base=8, d_phase=8, d_hidden=8), data)
    params = init_params(model_cfg, seed)
    return gradcheck(loss_graph(model_cfg, sample, cfg), params, step=step, tolerance=tolerance)


__all__ = [
    "TrainingDivergedError",
    "EpochLog",
    "FitResult",
    "SampleStep",
    "sample_step",
    "predict_index",
    "exact_match_at_1",
    "resolve_model_config",
    "fit",
    "write_training_log",
    "loss_graph",
    "toy_gradcheck",
]
