from __future__ import annotations

import math

import numpy as np
import pytest

from narrowqa.config import AnchorSource, LabelGenConfig
from narrowqa.labels.grid import CellIndex
from narrowqa.labels.masks import (
    LabelError,
    MaskTriple,
    compute_boi,
    compute_ooi,
    compute_oot,
    generate_corpus_labels,
    generate_labels,
)
from narrowqa.scene.records import (
    BACKGROUND_ID,
    ObjectRecord,
    QuestionRecord,
    SceneRecord,
    scene_bbox,
)


def oracle_boi(scene: SceneRecord, ids: set[int], size: int) -> tuple[bool, ...]:
    """Per-point, per-cell reference for the block-of-interest rule."""
    x_min, x_max, y_min, y_max = scene_bbox(scene)

    def cell(x: float, y: float) -> tuple[int, int]:
        def axis(v: float, low: float, high: float) -> int:
            if high - low <= 0:
                return 0
            return min(max(int(math.floor((v - low) / ((high - low) / size))), 0), size - 1)

        return axis(y, y_min, y_max), axis(x, x_min, x_max)

    interest = set()
    for (x, y, _), owner in zip(scene.points, scene.point_object_ids):
        if owner in ids:
            interest.add(cell(x, y))
    selected = set()
    for row in range(size):
        for col in range(size):
            if (row, col) not in interest:
                continue
            for (x, y, _), owner in zip(scene.points, scene.point_object_ids):
                if owner != BACKGROUND_ID and cell(x, y) == (row, col):
                    selected.add(owner)
    return tuple(obj.id in selected for obj in scene.objects)


def random_scene(rng: np.random.Generator, index: int) -> SceneRecord:
    n_objects = int(rng.integers(1, 7))
    points: list[tuple[float, float, float]] = []
    owners: list[int] = []
    for object_id in range(n_objects):
        for _ in range(int(rng.integers(1, 5))):
            points.append(tuple(float(v) for v in rng.uniform(-3.0, 3.0, size=3)))
            owners.append(object_id)
    for _ in range(int(rng.integers(0, 4))):
        points.append(tuple(float(v) for v in rng.uniform(-3.0, 3.0, size=3)))
        owners.append(BACKGROUND_ID)
    objects = tuple(ObjectRecord(id=k, label=f"thing{k}") for k in range(n_objects))
    return SceneRecord(f"rand{index}", tuple(points), tuple(owners), objects)


def random_question(rng: np.random.Generator, scene: SceneRecord) -> QuestionRecord:
    ids = list(scene.object_ids)
    rng.shuffle(ids)
    n_targets = int(rng.integers(1, len(ids) + 1))
    targets = tuple(ids[:n_targets])
    rest = ids[n_targets:]
    anchors = tuple(rest[: int(rng.integers(0, len(rest) + 1))])
    return QuestionRecord(
        f"{scene.scene_id}_q", scene.scene_id, "where is it?", ("x",), targets, anchors
    )


def test_isolated_target_collapses_all_masks(room_scene: SceneRecord) -> None:
    question = QuestionRecord("q", "room", "where is it?", ("x",), target_ids=(3,), anchor_ids=())
    labels = generate_labels(room_scene, question, LabelGenConfig())

    assert labels.boi == labels.ooi == labels.oot == (False, False, True, False)
    assert len(labels.boi_cells) == 1


def test_bystander_in_anchor_cell(room_scene: SceneRecord, room_question: QuestionRecord) -> None:
    labels = generate_labels(room_scene, room_question, LabelGenConfig())

    assert labels.to_record().oot == (1,)
    assert labels.to_record().ooi == (1, 2)
    assert labels.to_record().boi == (1, 2, 4)
    assert CellIndex(0, 0) in labels.boi_cells


def test_ooi_and_oot_sets(room_scene: SceneRecord) -> None:
    assert compute_ooi(room_scene, {1}, {2}) == (True, True, False, False)
    assert compute_ooi(room_scene, {3}, set()) == compute_oot(room_scene, {3})
    assert compute_oot(room_scene, {4}) == (False, False, False, True)
    assert compute_oot(room_scene, {1, 2, 3, 4}) == (True, True, True, True)


def test_unknown_ids_are_rejected(room_scene: SceneRecord) -> None:
    cfg = LabelGenConfig()
    with pytest.raises(LabelError):
        compute_boi(room_scene, {9}, set(), cfg)
    with pytest.raises(LabelError):
        compute_ooi(room_scene, {1}, {42})
    with pytest.raises(LabelError):
        compute_boi(room_scene, set(), set(), cfg)


def test_single_cell_grid_selects_every_object(room_scene: SceneRecord) -> None:
    boi, cells = compute_boi(room_scene, {1}, set(), LabelGenConfig(grid_size=1))
    assert boi == (True, True, True, True)
    assert cells == frozenset({CellIndex(0, 0)})


def test_background_points_never_select(scene_factory) -> None:
    scene = scene_factory(
        "bg",
        {0: ("cup", [(0.1, 0.1, 0.0)]), 1: ("mug", [(9.9, 9.9, 0.0)])},
        background=[(0.2, 0.2, 0.0), (9.8, 9.8, 0.0)],
    )
    boi, _ = compute_boi(scene, {0}, set(), LabelGenConfig(grid_size=2))
    assert boi == (True, False)


@pytest.mark.slow
@pytest.mark.parametrize("size", [1, 2, 5, 7])
def test_boi_matches_point_oracle(size: int) -> None:
    rng = np.random.default_rng(size)
    cfg = LabelGenConfig(grid_size=size)
    for index in range(1000):
        scene = random_scene(rng, index)
        question = random_question(rng, scene)
        ids = set(question.target_ids) | set(question.anchor_ids or ())
        boi, _ = compute_boi(scene, question.target_ids, question.anchor_ids or (), cfg)
        assert boi == oracle_boi(scene, ids, size), scene.scene_id


def test_nesting_holds_on_fuzzed_corpus() -> None:
    rng = np.random.default_rng(2024)
    cfg = LabelGenConfig(grid_size=5, anchor_source=AnchorSource.UNION)
    scenes = {}
    questions = []
    for index in range(1000):
        scene = random_scene(rng, index)
        scenes[scene.scene_id] = scene
        questions.append(random_question(rng, scene))

    for label in generate_corpus_labels(scenes, questions, cfg):
        for b, i, t in zip(label.boi, label.ooi, label.oot):
            assert (not t or i) and (not i or b)
        assert any(label.oot)


def test_masks_are_invariant_to_affine_maps(room_scene: SceneRecord, room_question: QuestionRecord) -> None:
    moved = SceneRecord(
        scene_id=room_scene.scene_id,
        points=tuple((2.5 * x - 7.0, 2.5 * y + 3.0, z) for x, y, z in room_scene.points),
        point_object_ids=room_scene.point_object_ids,
        objects=room_scene.objects,
    )
    cfg = LabelGenConfig()
    assert generate_labels(moved, room_question, cfg) == generate_labels(room_scene, room_question, cfg)


def test_generation_is_deterministic(room_scene: SceneRecord, room_question: QuestionRecord) -> None:
    cfg = LabelGenConfig()
    assert generate_labels(room_scene, room_question, cfg) == generate_labels(room_scene, room_question, cfg)


def test_mask_triple_rejects_broken_nesting() -> None:
    with pytest.raises(LabelError):
        MaskTriple("q", (0, 1), (True, False), (False, True), (False, True), frozenset(), 5)
    with pytest.raises(LabelError):
        MaskTriple("q", (0, 1), (True, True), (True, True), (False, False), frozenset(), 5)


def test_question_for_other_scene(room_scene: SceneRecord, room_question: QuestionRecord) -> None:
    from dataclasses import replace

    with pytest.raises(LabelError):
        generate_labels(room_scene, replace(room_question, scene_id="elsewhere"), LabelGenConfig())


def test_phase_vectors(room_scene: SceneRecord, room_question: QuestionRecord) -> None:
    labels = generate_labels(room_scene, room_question, LabelGenConfig())
    assert labels.phase("cg").tolist() == [1.0, 1.0, 0.0, 1.0]
    assert labels.phase("fg").tolist() == [1.0, 1.0, 0.0, 0.0]
    assert labels.phase("if").tolist() == [1.0, 0.0, 0.0, 0.0]
