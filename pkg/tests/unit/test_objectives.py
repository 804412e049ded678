from __future__ import annotations

import numpy as np
import pytest

from narrowqa.autodiff.tensor import ShapeError, Tape
from narrowqa.config import LossWeights, MaskSupervision, ModelConfig, SupervisionFlags, TrainConfig
from narrowqa.labels.masks import MaskTriple
from narrowqa.model.network import HCNModel, MaskPredictions
from narrowqa.model.params import init_params
from narrowqa.training.objectives import (
    combine_phase_losses,
    hsm_loss,
    phase_targets,
    total_loss,
)

WEIGHTS = LossWeights()


def unit_losses(tape: Tape, values: dict[str, float]):
    return {phase: tape.parameter(value) for phase, value in values.items()}


def test_all_phases_with_default_weights() -> None:
    tape = Tape()
    total = combine_phase_losses(tape, unit_losses(tape, {"cg": 1.0, "fg": 1.0, "if": 1.0}), WEIGHTS, SupervisionFlags())
    assert total.item() == pytest.approx(1.0)


def test_only_coarse_grounding() -> None:
    tape = Tape()
    flags = SupervisionFlags(cg=True, fg=False, if_=False)
    total = combine_phase_losses(tape, unit_losses(tape, {"cg": 1.0, "fg": 1.0, "if": 1.0}), WEIGHTS, flags)
    assert total.item() == pytest.approx(0.2)


def test_combination_is_a_dot_product() -> None:
    rng = np.random.default_rng(6)
    for _ in range(10):
        values = dict(zip(("cg", "fg", "if"), rng.uniform(0.0, 3.0, size=3)))
        tape = Tape()
        total = combine_phase_losses(tape, unit_losses(tape, values), WEIGHTS, SupervisionFlags())
        assert total.item() == pytest.approx(0.2 * values["cg"] + 0.3 * values["fg"] + 0.5 * values["if"])


def test_total_loss() -> None:
    tape = Tape()
    weights = LossWeights(ans=1.0)
    assert total_loss(tape, tape.constant(1.0), tape.constant(1.0), weights).item() == pytest.approx(2.0)
    assert total_loss(tape, tape.constant(0.0), tape.constant(0.7), LossWeights(ans=2.5)).item() == pytest.approx(1.75)


def _labels() -> MaskTriple:
    return MaskTriple(
        question_id="q",
        object_ids=(0, 1, 2, 3),
        boi=(True, True, True, False),
        ooi=(True, True, False, False),
        oot=(True, False, False, False),
        boi_cells=frozenset(),
        grid_size=5,
    )


def test_phase_targets() -> None:
    labels = _labels()
    hierarchical = phase_targets(labels, MaskSupervision.HIERARCHICAL)
    assert hierarchical["cg"].tolist() == [1.0, 1.0, 1.0, 0.0]
    assert sorted(hierarchical) == ["cg", "fg", "if"]
    assert list(phase_targets(labels, MaskSupervision.OBJECT_IDS)) == ["if"]


def test_length_mismatch() -> None:
    tape = Tape()
    preds = MaskPredictions(*(tape.parameter(np.full(3, 0.5)) for _ in range(3)))
    with pytest.raises(ShapeError):
        hsm_loss(tape, preds, phase_targets(_labels(), MaskSupervision.HIERARCHICAL), WEIGHTS, SupervisionFlags())


def test_disabled_phase_receives_no_gradient() -> None:
    cfg = ModelConfig(d_obj=4, d_text=3, d_base=6, d_phase=6, d_hidden=5, answer_vocab_size=4)
    model = HCNModel(cfg, init_params(cfg, seed=1))
    rng = np.random.default_rng(0)
    tokens, text = rng.normal(size=(4, 4)), rng.normal(size=(2, 3))
    train = TrainConfig(flags=SupervisionFlags(cg=False))

    tape = Tape()
    params = model.bind(tape)
    result = model.forward(tape, tokens, text, params)
    loss, components = hsm_loss(
        tape, result.masks, phase_targets(_labels(), MaskSupervision.HIERARCHICAL), train.weights, train.flags
    )
    tape.backward(loss)

    assert components["cg"] == 0.0
    assert components["fg"] > 0.0
    assert params["mask.cg.w"].grad is None
    assert params["mask.fg.w"].grad is not None
    assert np.any(params["mask.fg.w"].grad != 0.0)


@pytest.mark.parametrize(
    ("mode", "head"),
    [
        (MaskSupervision.BOI, "cg"),
        (MaskSupervision.OOI, "fg"),
        (MaskSupervision.OOT, "if"),
        (MaskSupervision.OBJECT_IDS, "if"),
    ],
)
def test_single_annotation_supervises_one_head(mode: MaskSupervision, head: str) -> None:
    labels = _labels()
    targets = phase_targets(labels, mode)
    assert list(targets) == [head]
    assert targets[head].tolist() == labels.phase(head).tolist()

    cfg = ModelConfig(d_obj=4, d_text=3, d_base=6, d_phase=6, d_hidden=5, answer_vocab_size=4)
    model = HCNModel(cfg, init_params(cfg, seed=2))
    rng = np.random.default_rng(1)
    tape = Tape()
    params = model.bind(tape)
    result = model.forward(tape, rng.normal(size=(4, 4)), rng.normal(size=(2, 3)), params)
    loss, components = hsm_loss(tape, result.masks, targets, WEIGHTS, SupervisionFlags())
    tape.backward(loss)

    for phase in ("cg", "fg", "if"):
        if phase == head:
            assert components[phase] > 0.0
            assert np.any(params[f"mask.{phase}.w"].grad != 0.0)
        else:
            assert components[phase] == 0.0
            assert params[f"mask.{phase}.w"].grad is None
