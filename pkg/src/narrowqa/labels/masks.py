"""Nested BoI / OoI / OoT object-level masks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..config import LabelGenConfig
from ..scene.records import BACKGROUND_ID, QuestionRecord, SceneRecord, scene_bbox
from .anchors import extract_anchors
from .grid import CellIndex, cells_of_points, flat_cells

_logger = logging.getLogger(__name__)


class LabelError(ValueError):
    """Raised for unknown object ids or masks that break the nesting order."""


@dataclass(frozen=True)
class LabelRecord:
    """Id-set view of a MaskTriple, as stored in the labels JSONL file."""

    question_id: str
    boi: tuple[int, ...]
    ooi: tuple[int, ...]
    oot: tuple[int, ...]
    boi_cells: tuple[tuple[int, int], ...]
    grid_size: int

    def __post_init__(self) -> None:
        if not self.oot:
            raise LabelError(f"{self.question_id}: empty OoT")
        if not set(self.oot) <= set(self.ooi) <= set(self.boi):
            raise LabelError(f"{self.question_id}: masks are not nested oot <= ooi <= boi")


@dataclass(frozen=True)
class MaskTriple:
    """Object-level masks for one question, one entry per scene object.

    Attributes:
        question_id: Question the masks belong to
        object_ids: Scene object ids in scene order
        boi: Objects with at least one point in a block of interest
        ooi: Targets and anchors
        oot: Targets
        boi_cells: Cells holding any target or anchor point
        grid_size: S used to build ``boi_cells``
    """

    question_id: str
    object_ids: tuple[int, ...]
    boi: tuple[bool, ...]
    ooi: tuple[bool, ...]
    oot: tuple[bool, ...]
    boi_cells: frozenset[CellIndex]
    grid_size: int

    def __post_init__(self) -> None:
        n = len(self.object_ids)
        if not (len(self.boi) == len(self.ooi) == len(self.oot) == n):
            raise LabelError(f"{self.question_id}: mask lengths differ from object count {n}")
        if not any(self.oot):
            raise LabelError(f"{self.question_id}: OoT mask is empty")
        for object_id, b, i, t in zip(self.object_ids, self.boi, self.ooi, self.oot):
            if (t and not i) or (i and not b):
                raise LabelError(
                    f"{self.question_id}: nesting broken at object {object_id}"
                )

    def phase(self, name: str) -> np.ndarray:
        """Mask for ``cg``/``fg``/``if`` as a float array of 0s and 1s."""
        masks = {"cg": self.boi, "fg": self.ooi, "if": self.oot}
        return np.asarray(masks[name], dtype=np.float64)

    def selected(self, mask: Iterable[bool]) -> tuple[int, ...]:
        return tuple(sorted(oid for oid, on in zip(self.object_ids, mask) if on))

    def to_record(self) -> LabelRecord:
        return LabelRecord(
            question_id=self.question_id,
            boi=self.selected(self.boi),
            ooi=self.selected(self.ooi),
            oot=self.selected(self.oot),
            boi_cells=tuple(sorted((cell.row, cell.col) for cell in self.boi_cells)),
            grid_size=self.grid_size,
        )


def _check_ids(scene: SceneRecord, ids: Iterable[int], role: str) -> None:
    unknown = sorted(set(ids) - set(scene.object_ids))
    if unknown:
        raise LabelError(f"unknown {role} ids {unknown} in scene {scene.scene_id}")


def _membership(scene: SceneRecord, ids: set[int]) -> tuple[bool, ...]:
    return tuple(obj.id in ids for obj in scene.objects)


def compute_boi(
    scene: SceneRecord,
    target_ids: Iterable[int],
    anchor_ids: Iterable[int],
    cfg: LabelGenConfig,
) -> tuple[tuple[bool, ...], frozenset[CellIndex]]:
    """Select every object owning a point in a cell touched by a target or anchor."""
    targets = set(target_ids)
    anchors = set(anchor_ids)
    if not targets:
        raise LabelError(f"scene {scene.scene_id}: no target ids")
    _check_ids(scene, targets, "target")
    _check_ids(scene, anchors, "anchor")

    size = cfg.grid_size
    ids = scene.ids_array
    rows, cols = cells_of_points(scene.points_array[:, :2], scene_bbox(scene), size)
    flat = flat_cells(rows, cols, size)

    interest = np.isin(ids, np.fromiter(targets | anchors, dtype=np.int64))
    interest_cells = np.unique(flat[interest])
    in_block = np.isin(flat, interest_cells) & (ids != BACKGROUND_ID)
    selected = set(int(oid) for oid in np.unique(ids[in_block]))

    cells = frozenset(CellIndex(int(c) // size, int(c) % size) for c in interest_cells)
    return _membership(scene, selected), cells


def compute_ooi(
    scene: SceneRecord, target_ids: Iterable[int], anchor_ids: Iterable[int]
) -> tuple[bool, ...]:
    targets, anchors = set(target_ids), set(anchor_ids)
    _check_ids(scene, targets, "target")
    _check_ids(scene, anchors, "anchor")
    return _membership(scene, targets | anchors)


def compute_oot(scene: SceneRecord, target_ids: Iterable[int]) -> tuple[bool, ...]:
    targets = set(target_ids)
    _check_ids(scene, targets, "target")
    return _membership(scene, targets)


def generate_labels(
    scene: SceneRecord, question: QuestionRecord, cfg: LabelGenConfig
) -> MaskTriple:
    """Compose anchor extraction and the three masks for one question."""
    if question.scene_id != scene.scene_id:
        raise LabelError(
            f"{question.question_id} refers to scene {question.scene_id}, not {scene.scene_id}"
        )
    anchors = extract_anchors(question, scene, cfg)
    boi, cells = compute_boi(scene, question.target_ids, anchors, cfg)
    return MaskTriple(
        question_id=question.question_id,
        object_ids=scene.object_ids,
        boi=boi,
        ooi=compute_ooi(scene, question.target_ids, anchors),
        oot=compute_oot(scene, question.target_ids),
        boi_cells=cells,
        grid_size=cfg.grid_size,
    )


def generate_corpus_labels(
    scenes: dict[str, SceneRecord],
    questions: Iterable[QuestionRecord],
    cfg: LabelGenConfig,
) -> list[MaskTriple]:
    """Labels for every question, in input order."""
    labels: list[MaskTriple] = []
    for question in questions:
        scene = scenes.get(question.scene_id)
        if scene is None:
            raise LabelError(f"{question.question_id}: unknown scene {question.scene_id}")
        labels.append(generate_labels(scene, question, cfg))
    _logger.debug("Generated labels for %d questions", len(labels))
    return labels


__all__ = [
    "LabelError",
    "LabelRecord",
    "MaskTriple",
    "compute_boi",
    "compute_ooi",
    "compute_oot",
    "generate_labels",
    "generate_corpus_labels",
]
