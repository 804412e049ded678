"""Procedural scenes, templated questions and the token featurizer."""

from __future__ import annotations

import hashlib
import logging
import re
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from ..config import SyntheticSpec
from ..progress import ProgressTracker
from ..scene.records import (
    BACKGROUND_ID,
    AnswerVocab,
    ObjectRecord,
    QuestionRecord,
    SceneRecord,
    scene_bbox,
)

_logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[a-z0-9]+")

TARGET_RADIUS = (0.5, 0.9)
DISTRACTOR_CLEARANCE = 1.8
OBJECT_SPACING = 0.6
BLOB_SIGMA = 0.12
_PLACEMENT_TRIES = 200
VALIDATION_BUCKETS = 10


def tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def stable_hash(*parts: object) -> int:
    """64-bit integer derived from the SHA-256 of the joined parts."""
    digest = hashlib.sha256(":".join(str(part) for part in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def is_validation(question_id: str) -> bool:
    """Deterministic 10% split by question-id hash."""
    digest = hashlib.sha256(question_id.encode("utf-8")).hexdigest()
    return int(digest, 16) % VALIDATION_BUCKETS == 0


@dataclass(frozen=True)
class SyntheticDataset:
    """Scenes, questions and the fixed answer vocabulary of a synthetic world."""

    spec: SyntheticSpec
    scenes: dict[str, SceneRecord]
    questions: list[QuestionRecord]
    vocab: AnswerVocab


def _blob(rng: np.random.Generator, center: np.ndarray, count: int) -> np.ndarray:
    xy = center + rng.normal(0.0, BLOB_SIGMA, size=(count, 2))
    z = rng.uniform(0.0, 0.8, size=(count, 1))
    return np.hstack([xy, z])


def _place_distractor(
    rng: np.random.Generator, spec: SyntheticSpec, anchor: np.ndarray, placed: list[np.ndarray]
) -> np.ndarray | None:
    low, high = 0.5, spec.extent - 0.5
    for _ in range(_PLACEMENT_TRIES):
        candidate = rng.uniform(low, high, size=2)
        if np.linalg.norm(candidate - anchor) < DISTRACTOR_CLEARANCE:
            continue
        if any(np.linalg.norm(candidate - other) < OBJECT_SPACING for other in placed):
            continue
        return candidate
    return None


def _target_label(rng: np.random.Generator, spec: SyntheticSpec, anchor_label: str) -> str:
    pool = [label for label in spec.labels if label != anchor_label]
    return pool[int(rng.integers(len(pool)))]


def _baited_answer(spec: SyntheticSpec, question_id: str, anchor_label: str, answer: str) -> str:
    """Bait answer for the biased share of training relation questions.

    The draw is keyed on the question id, so the scene geometry and every
    validation question are the same with or without bait.
    """
    bait = spec.shortcut_bait
    if bait is None or anchor_label != bait.trigger_label or is_validation(question_id):
        return answer
    draw = np.random.default_rng([spec.seed, stable_hash("bait", question_id)]).random()
    return bait.answer if draw < bait.rate else answer


def make_scene(spec: SyntheticSpec, index: int) -> tuple[SceneRecord, list[QuestionRecord]]:
    """Build scene ``index`` and its questions from an index-seeded generator."""
    rng = np.random.default_rng([spec.seed, index])
    scene_id = f"scene{index:04d}"
    n_objects = int(rng.integers(spec.objects_min, spec.objects_max + 1))

    anchor_label = spec.labels[int(rng.integers(len(spec.labels)))]
    target_label = _target_label(rng, spec, anchor_label)

    anchor_xy = rng.uniform(1.5, spec.extent - 1.5, size=2)
    angle = rng.uniform(0.0, 2.0 * np.pi)
    radius = rng.uniform(*TARGET_RADIUS)
    target_xy = anchor_xy + radius * np.array([np.cos(angle), np.sin(angle)])

    # (label, color, centroid); anchor first, target second.
    entries: list[tuple[str, str, np.ndarray]] = [
        (anchor_label, spec.colors[int(rng.integers(len(spec.colors)))], anchor_xy),
        (target_label, spec.colors[int(rng.integers(len(spec.colors)))], target_xy),
    ]
    others = [label for label in spec.labels if label != anchor_label]
    placed = [anchor_xy, target_xy]
    for _ in range(n_objects - 2):
        position = _place_distractor(rng, spec, anchor_xy, placed)
        if position is None:
            break
        placed.append(position)
        entries.append(
            (
                others[int(rng.integers(len(others)))],
                spec.colors[int(rng.integers(len(spec.colors)))],
                position,
            )
        )

    order = rng.permutation(len(entries))
    ids = {int(slot): object_id for object_id, slot in enumerate(order)}
    objects: list[ObjectRecord] = [None] * len(entries)  # type: ignore[list-item]
    chunks: list[np.ndarray] = []
    owners: list[int] = []
    for slot, (label, color, center) in enumerate(entries):
        object_id = ids[slot]
        objects[object_id] = ObjectRecord(id=object_id, label=label, attributes={"color": color})
    for object_id in range(len(entries)):
        slot = int(order[object_id])
        chunks.append(_blob(rng, entries[slot][2], spec.points_per_object))
        owners.extend([object_id] * spec.points_per_object)

    e = spec.extent
    corners = np.array([[0.0, 0.0, 0.0], [e, 0.0, 0.0], [0.0, e, 0.0], [e, e, 0.0]])
    extra = max(spec.background_points - 4, 0)
    floor = np.hstack([rng.uniform(0.0, e, size=(extra, 2)), np.zeros((extra, 1))])
    chunks.extend([corners, floor])
    owners.extend([BACKGROUND_ID] * (4 + extra))

    points = np.vstack(chunks)
    scene = SceneRecord(
        scene_id=scene_id,
        points=tuple((float(x), float(y), float(z)) for x, y, z in points),
        point_object_ids=tuple(owners),
        objects=tuple(objects),
    )

    anchor_id, target_id = ids[0], ids[1]
    target_color = entries[1][1]
    questions: list[QuestionRecord] = []
    for template in spec.templates:
        question_id = f"{scene_id}_q{len(questions)}"
        if template == "color":
            text = f"what color is the {target_label} next to the {anchor_label}?"
            answer = target_color
        else:
            text = f"what is next to the {anchor_label}?"
            answer = _baited_answer(spec, question_id, anchor_label, target_label)
        questions.append(
            QuestionRecord(
                question_id=question_id,
                scene_id=scene_id,
                question=text,
                answers=(answer,),
                target_ids=(target_id,),
                anchor_ids=(anchor_id,),
            )
        )
    return scene, questions


def make_synthetic_dataset(spec: SyntheticSpec, *, progress: bool = False) -> SyntheticDataset:
    """Generate every scene of ``spec``; identical specs give identical datasets."""
    scenes: dict[str, SceneRecord] = {}
    questions: list[QuestionRecord] = []
    tracker = ProgressTracker(spec.n_scenes) if progress else None
    step = max(spec.n_scenes // 10, 1)
    for index in range(spec.n_scenes):
        scene, scene_questions = make_scene(spec, index)
        scenes[scene.scene_id] = scene
        questions.extend(scene_questions)
        if tracker is not None and ((index + 1) % step == 0 or index + 1 == spec.n_scenes):
            tracker.advance(_logger, f"synthesised {scene.scene_id}", absolute=index + 1)
    vocab = AnswerVocab.from_answers(list(spec.labels) + list(spec.colors))
    _logger.debug("Synthetic world: %d scenes, %d questions", len(scenes), len(questions))
    return SyntheticDataset(spec=spec, scenes=scenes, questions=questions, vocab=vocab)


@lru_cache(maxsize=4096)
def _word_vector(seed: int, word: str, width: int) -> np.ndarray:
    rng = np.random.default_rng(stable_hash("word", seed, word))
    vector = rng.normal(0.0, 1.0, size=width)
    vector.setflags(write=False)
    return vector


class Featurizer:
    """Deterministic object and text tokens for a question about a scene.

    Object token layout: normalised centroid (2), label one-hot, colour
    one-hot, offset and distance to the anchor mention (3), and flags for
    the target-label and anchor mentions (2), plus seeded noise. Mentions
    resolve at concept level (a label and its synonyms are one concept);
    text tokens embed surface words, so a synonym swap changes the text
    tokens and leaves the object tokens alone.
    """

    def __init__(self, spec: SyntheticSpec):
        self.spec = spec

    @cached_property
    def concepts(self) -> dict[str, str]:
        table = {label: label for label in self.spec.labels}
        for label, synonyms in self.spec.synonyms.items():
            if label not in table:
                continue
            for synonym in synonyms:
                table.setdefault(synonym.lower(), label)
        return table

    @property
    def d_obj(self) -> int:
        return 7 + len(self.spec.labels) + len(self.spec.colors)

    @property
    def d_text(self) -> int:
        return self.spec.d_text

    def mentions(self, question: str) -> list[str]:
        """Concepts mentioned in ``question`` in order of appearance."""
        found: list[str] = []
        for word in tokenize(question):
            concept = self.concepts.get(word)
            if concept is None and word.endswith("s"):
                concept = self.concepts.get(word[:-1])
            if concept is not None:
                found.append(concept)
        return found

    def text_tokens(self, question: str) -> np.ndarray:
        words = tokenize(question) or ["<empty>"]
        return np.vstack([_word_vector(self.spec.seed, word, self.d_text) for word in words])

    def object_tokens(self, question: QuestionRecord, scene: SceneRecord) -> np.ndarray:
        labels = {label: k for k, label in enumerate(self.spec.labels)}
        colors = {color: k for k, color in enumerate(self.spec.colors)}
        x_min, x_max, y_min, y_max = scene_bbox(scene)
        scale = max(x_max - x_min, y_max - y_min, 1e-9)
        centroids = np.vstack([scene.object_points(oid)[:, :2].mean(axis=0) for oid in scene.object_ids])

        mentioned = self.mentions(question.question)
        anchor_concept = mentioned[-1] if mentioned else None
        target_concept = mentioned[0] if len(mentioned) >= 2 else None
        anchor_rows = [k for k, obj in enumerate(scene.objects) if obj.label == anchor_concept]

        n = len(scene.objects)
        n_labels = len(self.spec.labels)
        tokens = np.zeros((n, self.d_obj))
        tokens[:, 0] = (centroids[:, 0] - x_min) / scale
        tokens[:, 1] = (centroids[:, 1] - y_min) / scale
        relation = 2 + n_labels + len(self.spec.colors)
        if anchor_rows:
            offset = (centroids - centroids[anchor_rows].mean(axis=0)) / scale
            tokens[:, relation : relation + 2] = offset
            tokens[:, relation + 2] = np.linalg.norm(offset, axis=1)
        for k, obj in enumerate(scene.objects):
            if obj.label in labels:
                tokens[k, 2 + labels[obj.label]] = 1.0
            color = obj.attributes.get("color")
            if color in colors:
                tokens[k, 2 + n_labels + colors[color]] = 1.0
            tokens[k, relation + 3] = float(target_concept is not None and obj.label == target_concept)
            tokens[k, relation + 4] = float(anchor_concept is not None and obj.label == anchor_concept)

        rng = np.random.default_rng([self.spec.seed, stable_hash("noise", question.question_id)])
        return tokens + rng.normal(0.0, self.spec.noise, size=tokens.shape)


__all__ = [
    "TARGET_RADIUS",
    "DISTRACTOR_CLEARANCE",
    "SyntheticDataset",
    "Featurizer",
    "make_scene",
    "make_synthetic_dataset",
    "stable_hash",
    "is_validation",
    "tokenize",
]
