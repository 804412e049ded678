"""Pytest configuration and shared fixtures."""

from __future__ import annotations

from pathlib import Path

import pytest

from narrowqa.config import SyntheticSpec
from narrowqa.scene.records import BACKGROUND_ID, ObjectRecord, QuestionRecord, SceneRecord
from narrowqa.training.synthetic import SyntheticDataset, make_synthetic_dataset


def build_scene(
    scene_id: str,
    objects: dict[int, tuple[str, list[tuple[float, float, float]]]],
    background: list[tuple[float, float, float]] | None = None,
) -> SceneRecord:
    """Scene from ``{id: (label, points)}`` plus optional background points."""
    points: list[tuple[float, float, float]] = []
    owners: list[int] = []
    records = []
    for object_id, (label, object_points) in objects.items():
        records.append(ObjectRecord(id=object_id, label=label))
        points.extend(object_points)
        owners.extend([object_id] * len(object_points))
    for point in background or []:
        points.append(point)
        owners.append(BACKGROUND_ID)
    return SceneRecord(
        scene_id=scene_id,
        points=tuple(points),
        point_object_ids=tuple(owners),
        objects=tuple(records),
    )


@pytest.fixture
def temp_dir(tmp_path: Path) -> Path:
    """Create a temporary directory for tests.

    Args:
        tmp_path: pytest's temporary directory fixture

    Returns:
        Path to temporary directory
    """
    return tmp_path


@pytest.fixture
def scene_factory():
    return build_scene


@pytest.fixture
def room_scene() -> SceneRecord:
    """Ten-by-ten room: chair (1) at the origin corner, table (2) in the
    middle, sofa (3) far corner, lamp (4) sharing the table's cell."""
    return build_scene(
        "room",
        {
            1: ("chair", [(0.5, 0.5, 0.0), (1.0, 1.0, 0.5)]),
            2: ("table", [(6.0, 6.0, 0.0), (6.5, 6.5, 0.7)]),
            3: ("sofa", [(9.0, 1.0, 0.0), (9.5, 1.5, 0.4)]),
            4: ("lamp", [(6.8, 6.2, 1.2)]),
        },
        background=[(0.0, 0.0, 0.0), (10.0, 10.0, 0.0)],
    )


@pytest.fixture
def room_question() -> QuestionRecord:
    return QuestionRecord(
        question_id="room_q0",
        scene_id="room",
        question="What is next to the table?",
        answers=("chair",),
        target_ids=(1,),
        anchor_ids=(2,),
    )


@pytest.fixture
def tiny_spec() -> SyntheticSpec:
    """A world small enough for training tests."""
    return SyntheticSpec(n_scenes=12, objects_min=4, objects_max=5, seed=3)


@pytest.fixture
def tiny_dataset(tiny_spec: SyntheticSpec) -> SyntheticDataset:
    return make_synthetic_dataset(tiny_spec)
