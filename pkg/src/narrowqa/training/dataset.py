"""Training samples, the validation split and dataset directories."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from ..config import ConfigurationError, LabelGenConfig, SyntheticSpec
from ..labels.masks import MaskTriple, generate_labels
from ..scene.io import load_questions, load_scene_dir, load_vocab, save_scene, save_vocab, write_questions
from ..scene.records import QuestionRecord, SceneValidationError
from .synthetic import Featurizer, SyntheticDataset, is_validation

_logger = logging.getLogger(__name__)

SCENES_DIR = "scenes"
QUESTIONS_FILE = "questions.jsonl"
ANSWERS_FILE = "answers.txt"
WORLD_FILE = "world.json"


@dataclass(frozen=True)
class Sample:
    """One question ready for the model.

    Attributes:
        question: Source question record
        tokens: Object tokens (n x d_obj), scene object order
        text: Text tokens (t x d_text)
        labels: Generated BoI/OoI/OoT masks
        answer_index: Vocabulary index of the first gold answer
    """

    question: QuestionRecord
    tokens: np.ndarray
    text: np.ndarray
    labels: MaskTriple
    answer_index: int


def split_samples(samples: Sequence[Sample]) -> tuple[list[Sample], list[Sample]]:
    train = [s for s in samples if not is_validation(s.question.question_id)]
    val = [s for s in samples if is_validation(s.question.question_id)]
    return train, val


def build_samples(
    data: SyntheticDataset,
    labelgen: LabelGenConfig,
    questions: Iterable[QuestionRecord] | None = None,
) -> list[Sample]:
    """Featurize ``questions`` (all of ``data`` by default) in input order."""
    featurizer = Featurizer(data.spec)
    samples: list[Sample] = []
    for question in data.questions if questions is None else questions:
        scene = data.scenes.get(question.scene_id)
        if scene is None:
            raise SceneValidationError("scene_id", f"{question.question_id}: unknown scene")
        answer = question.answers[0].strip().lower()
        if answer not in data.vocab:
            raise SceneValidationError(
                "answers", f"{question.question_id}: answer {answer!r} is not in the vocabulary"
            )
        samples.append(
            Sample(
                question=question,
                tokens=featurizer.object_tokens(question, scene),
                text=featurizer.text_tokens(question.question),
                labels=generate_labels(scene, question, labelgen),
                answer_index=data.vocab.index(answer),
            )
        )
    return samples


def save_dataset(data: SyntheticDataset, out_dir: Path) -> list[Path]:
    """Write a dataset directory; returns the files written, sorted."""
    out_dir = Path(out_dir)
    written: list[Path] = []
    for scene_id in sorted(data.scenes):
        path = out_dir / SCENES_DIR / f"{scene_id}.json"
        save_scene(data.scenes[scene_id], path)
        written.append(path)
    write_questions(data.questions, out_dir / QUESTIONS_FILE)
    save_vocab(data.vocab, out_dir / ANSWERS_FILE)
    world = out_dir / WORLD_FILE
    world.write_text(json.dumps(data.spec.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.extend([out_dir / QUESTIONS_FILE, out_dir / ANSWERS_FILE, world])
    return sorted(written)


def load_dataset(data_dir: Path) -> SyntheticDataset:
    """Load a dataset directory written by ``save_dataset``."""
    data_dir = Path(data_dir)
    world = data_dir / WORLD_FILE
    if not world.exists():
        raise FileNotFoundError(f"'{world}' not found; is '{data_dir}' a dataset directory?")
    try:
        spec = SyntheticSpec.from_mapping(json.loads(world.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Invalid JSON in '{world}': {exc}") from exc
    scenes = load_scene_dir(data_dir / SCENES_DIR)
    questions = load_questions(data_dir / QUESTIONS_FILE, scenes)
    vocab = load_vocab(data_dir / ANSWERS_FILE)
    _logger.debug("Loaded dataset %s: %d scenes, %d questions", data_dir, len(scenes), len(questions))
    return SyntheticDataset(spec=spec, scenes=scenes, questions=questions, vocab=vocab)


__all__ = [
    "SCENES_DIR",
    "QUESTIONS_FILE",
    "ANSWERS_FILE",
    "WORLD_FILE",
    "Sample",
    "is_validation",
    "split_samples",
    "build_samples",
    "save_dataset",
    "load_dataset",
]
