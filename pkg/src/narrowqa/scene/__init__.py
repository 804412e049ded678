"""Scene data model and file I/O."""

from __future__ import annotations

from .io import (
    dump_scene,
    load_questions,
    load_scene,
    load_scene_dir,
    load_vocab,
    questions_by_scene,
    save_scene,
    save_vocab,
    write_questions,
)
from .records import (
    BACKGROUND_ID,
    AnswerVocab,
    ObjectRecord,
    QuestionRecord,
    SceneDataError,
    SceneParseError,
    SceneRecord,
    SceneValidationError,
    index_scenes,
    scene_bbox,
)

__all__ = [
    # Records
    "BACKGROUND_ID",
    "ObjectRecord",
    "SceneRecord",
    "QuestionRecord",
    "AnswerVocab",
    "scene_bbox",
    "index_scenes",
    # Errors
    "SceneDataError",
    "SceneParseError",
    "SceneValidationError",
    # I/O
    "dump_scene",
    "load_scene",
    "save_scene",
    "load_scene_dir",
    "load_questions",
    "write_questions",
    "load_vocab",
    "save_vocab",
    "questions_by_scene",
]
