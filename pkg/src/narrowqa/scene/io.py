"""Reading and writing scenes, questions and answer vocabularies."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .records import (
    AnswerVocab,
    ObjectRecord,
    QuestionRecord,
    SceneParseError,
    SceneRecord,
    SceneValidationError,
    index_scenes,
)

_logger = logging.getLogger(__name__)


def _require(data: Mapping[str, Any], key: str, kind: type | tuple[type, ...]) -> Any:
    if key not in data:
        raise SceneValidationError(key, "missing field")
    value = data[key]
    if not isinstance(value, kind) or isinstance(value, bool) and kind is not bool:
        raise SceneValidationError(key, f"expected {_kind_name(kind)}, got {type(value).__name__}")
    return value


def _kind_name(kind: type | tuple[type, ...]) -> str:
    if isinstance(kind, tuple):
        return " or ".join(k.__name__ for k in kind)
    return kind.__name__


def _int_list(values: Any, field_name: str) -> tuple[int, ...]:
    if not isinstance(values, list):
        raise SceneValidationError(field_name, "expected a list of integers")
    result: list[int] = []
    for value in values:
        if not isinstance(value, int) or isinstance(value, bool):
            raise SceneValidationError(field_name, f"non-integer entry {value!r}")
        result.append(value)
    return tuple(result)


def _read_text(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise SceneParseError(f"not valid UTF-8 (byte {exc.start})", path=path) from exc


def scene_from_mapping(data: Mapping[str, Any]) -> SceneRecord:
    """Build a validated SceneRecord from decoded JSON."""
    if not isinstance(data, dict):
        raise SceneValidationError("scene", "top level must be an object")
    scene_id = _require(data, "scene_id", str)
    raw_points = _require(data, "points", list)
    points: list[tuple[float, float, float]] = []
    for position, raw in enumerate(raw_points):
        if not isinstance(raw, list) or len(raw) != 3:
            raise SceneValidationError("points", f"point {position} must be [x, y, z]")
        try:
            points.append((float(raw[0]), float(raw[1]), float(raw[2])))
        except (TypeError, ValueError) as exc:
            raise SceneValidationError("points", f"point {position} is not numeric") from exc
    point_ids = _int_list(_require(data, "point_object_ids", list), "point_object_ids")

    objects: list[ObjectRecord] = []
    for raw in _require(data, "objects", list):
        if not isinstance(raw, dict):
            raise SceneValidationError("objects", "entries must be objects")
        attributes = raw.get("attributes", {})
        if not isinstance(attributes, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in attributes.items()
        ):
            raise SceneValidationError("objects[].attributes", "must map strings to strings")
        object_id = _require(raw, "id", int)
        label = _require(raw, "label", str)
        objects.append(ObjectRecord(id=object_id, label=label, attributes=attributes))

    return SceneRecord(
        scene_id=scene_id,
        points=tuple(points),
        point_object_ids=point_ids,
        objects=tuple(objects),
    )


def scene_to_mapping(scene: SceneRecord) -> dict[str, Any]:
    return {
        "scene_id": scene.scene_id,
        "points": [list(point) for point in scene.points],
        "point_object_ids": list(scene.point_object_ids),
        "objects": [
            {
                "id": obj.id,
                "label": obj.label,
                "attributes": {key: obj.attributes[key] for key in sorted(obj.attributes)},
            }
            for obj in scene.objects
        ],
    }


def dump_scene(scene: SceneRecord) -> str:
    """Canonical single-line JSON for a scene, newline terminated."""
    return json.dumps(scene_to_mapping(scene), separators=(",", ":")) + "\n"


def load_scene(path: Path) -> SceneRecord:
    """Load and validate a scene JSON file."""
    text = _read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(exc.msg, path=path, line=exc.lineno) from exc
    return scene_from_mapping(data)


def save_scene(scene: SceneRecord, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_scene(scene), encoding="utf-8")


def load_scene_dir(directory: Path) -> dict[str, SceneRecord]:
    """Load every ``*.json`` scene in ``directory`` keyed by scene id."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"Scene directory '{directory}' does not exist")
    scenes = [load_scene(path) for path in sorted(directory.glob("*.json"))]
    _logger.debug("Loaded %d scenes from %s", len(scenes), directory)
    return index_scenes(scenes)


def question_from_mapping(data: Mapping[str, Any]) -> QuestionRecord:
    if not isinstance(data, dict):
        raise SceneValidationError("question", "record must be an object")
    answers = _require(data, "answers", list)
    if not all(isinstance(answer, str) for answer in answers):
        raise SceneValidationError("answers", "answers must be strings")
    anchors = data.get("anchor_ids")
    return QuestionRecord(
        question_id=_require(data, "question_id", str),
        scene_id=_require(data, "scene_id", str),
        question=_require(data, "question", str),
        answers=tuple(answers),
        target_ids=_int_list(_require(data, "target_ids", list), "target_ids"),
        anchor_ids=None if anchors is None else _int_list(anchors, "anchor_ids"),
    )


def question_to_mapping(question: QuestionRecord) -> dict[str, Any]:
    data: dict[str, Any] = {
        "question_id": question.question_id,
        "scene_id": question.scene_id,
        "question": question.question,
        "answers": list(question.answers),
        "target_ids": list(question.target_ids),
    }
    if question.anchor_ids is not None:
        data["anchor_ids"] = list(question.anchor_ids)
    return data


def load_questions(
    path: Path, scenes: Mapping[str, SceneRecord] | None = None
) -> list[QuestionRecord]:
    """Load a questions JSONL file, one record per non-blank line.

    When ``scenes`` is supplied every record is cross-checked against its
    scene; an unknown scene id is a validation error.
    """
    records: list[QuestionRecord] = []
    for line_number, line in enumerate(_read_text(path).split("\n"), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SceneParseError(exc.msg, path=path, line=line_number) from exc
        try:
            question = question_from_mapping(data)
            if scenes is not None:
                scene = scenes.get(question.scene_id)
                if scene is None:
                    raise SceneValidationError(
                        "scene_id",
                        f"{question.question_id} refers to unknown scene {question.scene_id}",
                    )
                question.validate_against(scene)
        except SceneValidationError as exc:
            raise SceneValidationError(exc.field, f"line {line_number}: {exc}") from exc
        records.append(question)
    return records


def write_questions(questions: Iterable[QuestionRecord], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for question in questions:
            fh.write(json.dumps(question_to_mapping(question)) + "\n")


def load_vocab(path: Path) -> AnswerVocab:
    """Answer vocabulary: one answer per line, index = 0-based line number.

    A blank line is a parse error.
    """
    answers: list[str] = []
    for line_number, line in enumerate(_read_text(path).splitlines(), start=1):
        answer = line.strip()
        if not answer:
            raise SceneParseError("blank line in answer vocabulary", path=path, line=line_number)
        answers.append(answer)
    return AnswerVocab(tuple(answers))


def save_vocab(vocab: AnswerVocab, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{answer}\n" for answer in vocab.answers), encoding="utf-8")


def questions_by_scene(questions: Sequence[QuestionRecord]) -> dict[str, list[QuestionRecord]]:
    grouped: dict[str, list[QuestionRecord]] = {}
    for question in questions:
        grouped.setdefault(question.scene_id, []).append(question)
    return grouped


__all__ = [
    "scene_from_mapping",
    "scene_to_mapping",
    "dump_scene",
    "load_scene",
    "save_scene",
    "load_scene_dir",
    "question_from_mapping",
    "question_to_mapping",
    "load_questions",
    "write_questions",
    "load_vocab",
    "save_vocab",
    "questions_by_scene",
]
