"""Scene, question and answer-vocabulary records."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

BACKGROUND_ID = -1


class SceneDataError(ValueError):
    """Base class for problems with scene, question or vocabulary data."""


class SceneParseError(SceneDataError):
    """Raised when a file cannot be decoded.

    Attributes:
        path: File that failed to parse (if known)
        line: 1-based line number for line-oriented formats
    """

    def __init__(self, message: str, *, path: object = None, line: int | None = None):
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(f"{location}{message}")
        self.path = path
        self.line = line


class SceneValidationError(SceneDataError):
    """Raised when a record violates one of its invariants.

    Attributes:
        field: Name of the offending field
    """

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ObjectRecord:
    """A segmented object in a scene.

    Attributes:
        id: Non-negative object id, unique within the scene
        label: Lowercase class label (e.g. "chair")
        attributes: Free-form attributes such as {"color": "brown"}
    """

    id: int
    label: str
    attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.id, int) or isinstance(self.id, bool) or self.id < 0:
            raise SceneValidationError("objects[].id", f"must be a non-negative integer, got {self.id!r}")
        if not isinstance(self.label, str) or not self.label.strip():
            raise SceneValidationError("objects[].label", f"object {self.id} has an empty label")
        object.__setattr__(self, "label", self.label.strip().lower())
        object.__setattr__(self, "attributes", dict(self.attributes))


@dataclass(frozen=True)
class SceneRecord:
    """Point cloud with per-point object ids and the object table.

    Points are stored as tuples so records compare by value; ``points_array``
    and ``ids_array`` expose cached read-only numpy views for vectorised code.
    """

    scene_id: str
    points: tuple[tuple[float, float, float], ...]
    point_object_ids: tuple[int, ...]
    objects: tuple[ObjectRecord, ...]

    def __post_init__(self) -> None:
        validate_scene(self)

    @cached_property
    def points_array(self) -> np.ndarray:
        array = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        array.setflags(write=False)
        return array

    @cached_property
    def ids_array(self) -> np.ndarray:
        array = np.asarray(self.point_object_ids, dtype=np.int64)
        array.setflags(write=False)
        return array

    @property
    def object_ids(self) -> tuple[int, ...]:
        return tuple(obj.id for obj in self.objects)

    def object_points(self, object_id: int) -> np.ndarray:
        return self.points_array[self.ids_array == object_id]


def validate_scene(scene: SceneRecord) -> None:
    """Check every SceneRecord invariant, naming the offending field."""
    if not isinstance(scene.scene_id, str) or not scene.scene_id:
        raise SceneValidationError("scene_id", "must be a non-empty string")
    if len(scene.points) == 0:
        raise SceneValidationError("points", f"scene {scene.scene_id} has no points")
    for position, point in enumerate(scene.points):
        if len(point) != 3:
            raise SceneValidationError(
                "points", f"point {position} has {len(point)} coordinates, expected 3"
            )
    if len(scene.point_object_ids) != len(scene.points):
        raise SceneValidationError(
            "point_object_ids",
            f"{len(scene.point_object_ids)} ids for {len(scene.points)} points",
        )

    known: set[int] = set()
    for obj in scene.objects:
        if obj.id in known:
            raise SceneValidationError("objects", f"duplicate object id {obj.id}")
        known.add(obj.id)

    owned: set[int] = set()
    for position, object_id in enumerate(scene.point_object_ids):
        if object_id == BACKGROUND_ID:
            continue
        if object_id < BACKGROUND_ID:
            raise SceneValidationError(
                "point_object_ids", f"point {position} has invalid id {object_id}"
            )
        if object_id not in known:
            raise SceneValidationError(
                "point_object_ids",
                f"point {position} references unknown object {object_id}",
            )
        owned.add(object_id)

    orphans = sorted(known - owned)
    if orphans:
        raise SceneValidationError("objects", f"objects without points: {orphans}")


@dataclass(frozen=True)
class QuestionRecord:
    """A question about one scene with its gold answers and grounding.

    Attributes:
        question_id: Unique question identifier
        scene_id: Scene the question refers to
        question: Question text
        answers: Gold answers; any one counts as exact-match correct
        target_ids: Objects that directly answer the question (sorted)
        anchor_ids: Objects mentioned to help locate the target, or None
            when the annotation does not provide them
    """

    question_id: str
    scene_id: str
    question: str
    answers: tuple[str, ...]
    target_ids: tuple[int, ...]
    anchor_ids: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if not self.question_id:
            raise SceneValidationError("question_id", "must be a non-empty string")
        if not self.question or not self.question.strip():
            raise SceneValidationError("question", f"{self.question_id}: empty question")
        if not self.answers:
            raise SceneValidationError("answers", f"{self.question_id}: no answers")
        if not self.target_ids:
            raise SceneValidationError("target_ids", f"{self.question_id}: no target ids")
        object.__setattr__(self, "answers", tuple(self.answers))
        object.__setattr__(self, "target_ids", tuple(sorted(set(self.target_ids))))
        if self.anchor_ids is not None:
            anchors = tuple(sorted(set(self.anchor_ids)))
            object.__setattr__(self, "anchor_ids", anchors)
            overlap = set(anchors) & set(self.target_ids)
            if overlap:
                raise SceneValidationError(
                    "anchor_ids",
                    f"{self.question_id}: ids {sorted(overlap)} are both target and anchor",
                )

    def validate_against(self, scene: SceneRecord) -> None:
        """Check that every referenced id exists in ``scene``."""
        if scene.scene_id != self.scene_id:
            raise SceneValidationError(
                "scene_id", f"{self.question_id} refers to {self.scene_id}, not {scene.scene_id}"
            )
        ids = set(scene.object_ids)
        for field_name, values in (("target_ids", self.target_ids), ("anchor_ids", self.anchor_ids or ())):
            missing = sorted(set(values) - ids)
            if missing:
                raise SceneValidationError(
                    field_name,
                    f"{self.question_id}: unknown object ids {missing} in scene {scene.scene_id}",
                )


@dataclass(frozen=True)
class AnswerVocab:
    """Ordered answer vocabulary with a reverse lookup."""

    answers: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.answers)) != len(self.answers):
            raise SceneValidationError("answers", "answer vocabulary contains duplicates")

    @cached_property
    def lookup(self) -> dict[str, int]:
        return {answer: index for index, answer in enumerate(self.answers)}

    def __len__(self) -> int:
        return len(self.answers)

    def index(self, answer: str) -> int:
        try:
            return self.lookup[answer]
        except KeyError as exc:
            raise SceneValidationError("answer", f"{answer!r} is not in the vocabulary") from exc

    def __contains__(self, answer: object) -> bool:
        return answer in self.lookup

    @classmethod
    def from_answers(cls, answers: Iterable[str]) -> "AnswerVocab":
        return cls(tuple(sorted({answer.strip().lower() for answer in answers if answer.strip()})))


def scene_bbox(scene: SceneRecord) -> tuple[float, float, float, float]:
    """Return ``(x_min, x_max, y_min, y_max)`` over all scene points."""
    xy = scene.points_array[:, :2]
    x_min, y_min = xy.min(axis=0)
    x_max, y_max = xy.max(axis=0)
    return float(x_min), float(x_max), float(y_min), float(y_max)


def index_scenes(scenes: Sequence[SceneRecord]) -> dict[str, SceneRecord]:
    index: dict[str, SceneRecord] = {}
    for scene in scenes:
        if scene.scene_id in index:
            raise SceneValidationError("scene_id", f"duplicate scene id {scene.scene_id}")
        index[scene.scene_id] = scene
    return index


__all__ = [
    "BACKGROUND_ID",
    "SceneDataError",
    "SceneParseError",
    "SceneValidationError",
    "ObjectRecord",
    "SceneRecord",
    "QuestionRecord",
    "AnswerVocab",
    "validate_scene",
    "scene_bbox",
    "index_scenes",
]
