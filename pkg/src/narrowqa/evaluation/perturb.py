"""Synonym-substitution question variants and the shortcut probe."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..config import ANSWER_ONLY, ConfigurationError, TrainConfig, default_synonyms
from ..model.network import HCNModel
from ..scene.records import QuestionRecord
from ..training.dataset import Sample, build_samples, split_samples
from ..training.loop import exact_match_at_1, fit
from ..training.synthetic import SyntheticDataset, stable_hash

_logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"[A-Za-z0-9]+")


@dataclass(frozen=True)
class PerturbationLexicon:
    """Token to synonym list, plus the seed that picks among synonyms."""

    entries: Mapping[str, tuple[str, ...]]
    seed: int = 0

    def __post_init__(self) -> None:
        cleaned: dict[str, tuple[str, ...]] = {}
        for token, synonyms in self.entries.items():
            key = token.strip().lower()
            values = tuple(s.strip().lower() for s in synonyms)
            if not key or not values or any(not s for s in values):
                raise ConfigurationError(f"lexicon entry '{token}' needs a non-empty synonym list")
            if key in values:
                raise ConfigurationError(f"lexicon entry '{token}' lists itself as a synonym")
            cleaned[key] = values
        object.__setattr__(self, "entries", cleaned)

    def __len__(self) -> int:
        return len(self.entries)


def load_lexicon(path: Path, seed: int = 0) -> PerturbationLexicon:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"Invalid JSON in '{path}': {exc}") from exc
    if not isinstance(data, dict) or not all(
        isinstance(v, list) and all(isinstance(s, str) for s in v) for v in data.values()
    ):
        raise ConfigurationError(f"'{path}' must map tokens to lists of synonyms")
    return PerturbationLexicon({k: tuple(v) for k, v in data.items()}, seed=seed)


def default_lexicon(seed: int = 0) -> PerturbationLexicon:
    return PerturbationLexicon(default_synonyms(), seed=seed)


def perturb_question(question: QuestionRecord, lexicon: PerturbationLexicon) -> QuestionRecord:
    """Replace every whole-word lexicon token; answers and grounding are kept."""
    if not lexicon.entries:
        return question
    rng = np.random.default_rng(stable_hash("perturb", lexicon.seed, question.question_id))

    def substitute(match: re.Match[str]) -> str:
        synonyms = lexicon.entries.get(match.group(0).lower())
        if synonyms is None:
            return match.group(0)
        return synonyms[int(rng.integers(len(synonyms)))]

    text = _WORD_RE.sub(substitute, question.question)
    return question if text == question.question else replace(question, question=text)


def perturb_questions(
    questions: Iterable[QuestionRecord], lexicon: PerturbationLexicon
) -> list[QuestionRecord]:
    return [perturb_question(question, lexicon) for question in questions]


@dataclass(frozen=True)
class ShortcutResult:
    em1_before: float
    em1_after: float

    @property
    def delta(self) -> float:
        return self.em1_before - self.em1_after

    def to_dict(self, scale: float = 100.0) -> dict[str, float]:
        return {
            "em1_before": self.em1_before * scale,
            "em1_after": self.em1_after * scale,
            "delta": self.delta * scale,
        }


def shortcut_degradation(
    model: HCNModel,
    data: SyntheticDataset,
    samples: Sequence[Sample],
    lexicon: PerturbationLexicon,
    cfg: TrainConfig,
) -> ShortcutResult:
    """EM@1 on ``samples`` before and after synonym perturbation of their questions."""
    perturbed = build_samples(
        data, cfg.labelgen, perturb_questions((s.question for s in samples), lexicon)
    )
    return ShortcutResult(
        em1_before=exact_match_at_1(model, samples),
        em1_after=exact_match_at_1(model, perturbed),
    )


@dataclass(frozen=True)
class ShortcutProbeRow:
    seed: int
    supervised: ShortcutResult
    answer_only: ShortcutResult

    @property
    def supervised_holds(self) -> bool:
        return self.supervised.delta <= self.answer_only.delta


@dataclass(frozen=True)
class ShortcutProbeReport:
    """Per-seed degradation of the supervised and answer-only runs."""

    rows: tuple[ShortcutProbeRow, ...]
    supervised_label: str

    @property
    def majority_holds(self) -> bool:
        return sum(row.supervised_holds for row in self.rows) * 2 > len(self.rows)

    def to_dict(self) -> dict[str, object]:
        return {
            "supervised": self.supervised_label,
            "rows": [
                {
                    "seed": row.seed,
                    "answer_only": row.answer_only.to_dict(),
                    "supervised": row.supervised.to_dict(),
                    "supervised_degrades_less": row.supervised_holds,
                }
                for row in self.rows
            ],
            "majority_supervised_degrades_less": self.majority_holds,
        }

    def format(self) -> str:
        header = f"{'model':<16}{'seed':>6}{'before':>10}{'after':>10}{'drop':>10}"
        lines = [header]
        for row in self.rows:
            for name, result in (("answer-only", row.answer_only), (self.supervised_label, row.supervised)):
                lines.append(
                    f"{name:<16}{row.seed:>6}{result.em1_before * 100:>10.2f}"
                    f"{result.em1_after * 100:>10.2f}{result.delta * 100:>10.2f}"
                )
        verdict = "yes" if self.majority_holds else "no"
        lines.append(f"supervised run degrades no more than answer-only (majority): {verdict}")
        return "\n".join(lines)


def run_shortcut_probe(
    cfg: TrainConfig,
    data: SyntheticDataset,
    lexicon: PerturbationLexicon,
    seeds: Sequence[int],
    *,
    evaluation: Sequence[Sample] | None = None,
) -> ShortcutProbeReport:
    """Train ``cfg.flags`` and answer-only models per seed and compare their drops.

    The drops are measured on ``evaluation``, by default the held-out split
    (all questions when nothing is held out).
    """
    if not seeds:
        raise ValueError("at least one seed is required")
    samples = build_samples(data, cfg.labelgen)
    if evaluation is None:
        _, held_out = split_samples(samples)
        evaluation = held_out or list(samples)
    if not evaluation:
        raise ValueError("no questions to evaluate the shortcut on")
    rows: list[ShortcutProbeRow] = []
    for seed in seeds:
        results: dict[str, ShortcutResult] = {}
        for name, flags in (("supervised", cfg.flags), ("answer_only", ANSWER_ONLY)):
            run_cfg = replace(cfg, seed=seed, flags=flags)
            model = fit(run_cfg, data, samples=samples).model
            results[name] = shortcut_degradation(model, data, evaluation, lexicon, run_cfg)
            _logger.info(
                "seed %d %s: EM@1 %.3f -> %.3f",
                seed, flags.label, results[name].em1_before, results[name].em1_after,
            )
        rows.append(
            ShortcutProbeRow(seed=seed, supervised=results["supervised"], answer_only=results["answer_only"])
        )
    return ShortcutProbeReport(rows=tuple(rows), supervised_label=cfg.flags.label)


__all__ = [
    "PerturbationLexicon",
    "load_lexicon",
    "default_lexicon",
    "perturb_question",
    "perturb_questions",
    "ShortcutResult",
    "shortcut_degradation",
    "ShortcutProbeRow",
    "ShortcutProbeReport",
    "run_shortcut_probe",
]
