"""Answer metrics (EM@k, BLEU, ROUGE-L) and model evaluation reports."""

from __future__ import annotations

import logging
import re
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from nltk.translate.bleu_score import sentence_bleu

from ..model.network import HCNModel
from ..model.params import PHASES
from ..scene.records import AnswerVocab

if TYPE_CHECKING:
    from ..training.dataset import Sample

_logger = logging.getLogger(__name__)

ROUGE_BETA = 1.2
MAX_BLEU_ORDER = 4

_PUNCTUATION_RE = re.compile(r"[^\w\s]")


def canonicalize(text: str) -> str:
    """Lowercase, drop punctuation and collapse whitespace."""
    return " ".join(_PUNCTUATION_RE.sub(" ", text.lower()).split())


def tokens_of(text: str) -> list[str]:
    return canonicalize(text).split()


def rank_answers(logits: np.ndarray, vocab: AnswerVocab) -> list[str]:
    """Answers by descending logit; ties keep the lower vocabulary index first."""
    order = np.argsort(-np.asarray(logits, dtype=np.float64), kind="stable")
    return [vocab.answers[int(i)] for i in order]


def em_at_k(ranked: Sequence[str], gold: Iterable[str], k: int) -> int:
    """1 if any canonicalized gold answer is among the top ``k`` ranked answers."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    golds = {canonicalize(answer) for answer in gold}
    return int(any(canonicalize(answer) in golds for answer in ranked[:k]))


def exact_match_rate(
    rankings: Sequence[Sequence[str]], golds: Sequence[Iterable[str]], k: int
) -> float:
    if len(rankings) != len(golds):
        raise ValueError("rankings and gold answers differ in length")
    if not rankings:
        return 0.0
    return sum(em_at_k(r, g, k) for r, g in zip(rankings, golds)) / len(rankings)


def bleu_n(candidate: Sequence[str], references: Sequence[Sequence[str]], n: int) -> float:
    """Sentence BLEU with uniform weights up to order ``n`` and no smoothing.

    Delegates to nltk's ``sentence_bleu``: clipped n-gram precision against
    all references and a brevity penalty from the closest reference length.
    A zero precision at any order gives (numerically) 0, as does an empty
    candidate.
    """
    if n < 1:
        raise ValueError(f"BLEU order must be >= 1, got {n}")
    refs = [list(ref) for ref in references if ref]
    if not candidate or not refs:
        return 0.0
    with warnings.catch_warnings():
        # nltk warns on every zero n-gram overlap
        warnings.simplefilter("ignore", UserWarning)
        score = sentence_bleu(refs, list(candidate), weights=(1.0 / n,) * n)
    return float(score)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    previous = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            current.append(previous[j - 1] + 1 if x == y else max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: Sequence[str], references: Sequence[Sequence[str]], beta: float = ROUGE_BETA) -> float:
    """LCS-based F-measure, best over references."""
    best = 0.0
    if not candidate:
        return best
    for ref in references:
        if not ref:
            continue
        lcs = _lcs_length(candidate, ref)
        if lcs == 0:
            continue
        precision = lcs / len(candidate)
        recall = lcs / len(ref)
        score = (1 + beta**2) * precision * recall / (recall + beta**2 * precision)
        best = max(best, score)
    return best


@dataclass(frozen=True)
class CandidateScores:
    bleu: dict[int, float]
    rouge_l: float
    empty: bool


def score_candidate(candidate: str, references: Iterable[str]) -> CandidateScores:
    cand = tokens_of(candidate)
    refs = [tokens_of(ref) for ref in references]
    return CandidateScores(
        bleu={n: bleu_n(cand, refs, n) for n in range(1, MAX_BLEU_ORDER + 1)},
        rouge_l=rouge_l(cand, refs),
        empty=not cand,
    )


@dataclass(frozen=True)
class MaskScores:
    accuracy: float
    f1: float


@dataclass(frozen=True)
class MetricsReport:
    """Corpus metrics as fractions in [0, 1]; ``to_dict`` scales by 100.

    Attributes:
        em1: Share of questions whose gold answer ranks first
        em10: Share of questions with a gold answer in the top ten
        bleu: Mean sentence BLEU-n of the top answer, n = 1..4
        rouge_l: Mean ROUGE-L of the top answer
        count: Number of questions scored
        empty_candidates: Top answers that canonicalize to nothing
        masks: Per-phase mask accuracy/F1 at threshold 0.5 (when labels known)
    """

    em1: float
    em10: float
    bleu: dict[int, float]
    rouge_l: float
    count: int
    empty_candidates: int = 0
    masks: dict[str, MaskScores] = field(default_factory=dict)

    def to_dict(self, scale: float = 100.0) -> dict[str, object]:
        data: dict[str, object] = {
            "count": self.count,
            "em1": self.em1 * scale,
            "em10": self.em10 * scale,
            **{f"bleu{n}": value * scale for n, value in sorted(self.bleu.items())},
            "rouge_l": self.rouge_l * scale,
            "empty_candidates": self.empty_candidates,
        }
        if self.masks:
            data["masks"] = {
                phase: {"accuracy": s.accuracy * scale, "f1": s.f1 * scale}
                for phase, s in self.masks.items()
            }
        return data


def compute_metrics(
    rankings: Sequence[Sequence[str]], golds: Sequence[Sequence[str]]
) -> MetricsReport:
    """Score ranked answer lists against gold answers."""
    if len(rankings) != len(golds):
        raise ValueError("rankings and gold answers differ in length")
    count = len(rankings)
    bleu_sums = {n: 0.0 for n in range(1, MAX_BLEU_ORDER + 1)}
    rouge_sum = 0.0
    empty = 0
    for ranked, gold in zip(rankings, golds):
        scores = score_candidate(ranked[0] if ranked else "", gold)
        for n, value in scores.bleu.items():
            bleu_sums[n] += value
        rouge_sum += scores.rouge_l
        empty += int(scores.empty)
    denominator = max(count, 1)
    return MetricsReport(
        em1=exact_match_rate(rankings, golds, 1),
        em10=exact_match_rate(rankings, golds, 10),
        bleu={n: total / denominator for n, total in bleu_sums.items()},
        rouge_l=rouge_sum / denominator,
        count=count,
        empty_candidates=empty,
    )


def mask_scores(predicted: np.ndarray, label: np.ndarray, threshold: float = 0.5) -> tuple[int, int, int, int]:
    """``(tp, fp, fn, tn)`` of thresholded probabilities against a 0/1 label."""
    chosen = np.asarray(predicted) >= threshold
    truth = np.asarray(label) > 0.5
    return (
        int(np.sum(chosen & truth)),
        int(np.sum(chosen & ~truth)),
        int(np.sum(~chosen & truth)),
        int(np.sum(~chosen & ~truth)),
    )


def evaluate_model(model: HCNModel, samples: Sequence[Sample], vocab: AnswerVocab) -> MetricsReport:
    """Answer metrics plus per-phase mask diagnostics over ``samples``."""
    rankings: list[list[str]] = []
    golds: list[Sequence[str]] = []
    confusion = {phase: np.zeros(4, dtype=np.int64) for phase in PHASES}
    for sample in samples:
        prediction = model.predict(sample.tokens, sample.text)
        rankings.append(rank_answers(prediction.logits, vocab))
        golds.append(sample.question.answers)
        for phase in PHASES:
            confusion[phase] += mask_scores(prediction.masks[phase], sample.labels.phase(phase))
    report = compute_metrics(rankings, golds)
    masks: dict[str, MaskScores] = {}
    for phase, (tp, fp, fn, tn) in confusion.items():
        total = tp + fp + fn + tn
        if total == 0:
            continue
        f1_den = 2 * tp + fp + fn
        masks[phase] = MaskScores(
            accuracy=(tp + tn) / total, f1=(2 * tp / f1_den) if f1_den else 1.0
        )
    return MetricsReport(
        em1=report.em1,
        em10=report.em10,
        bleu=report.bleu,
        rouge_l=report.rouge_l,
        count=report.count,
        empty_candidates=report.empty_candidates,
        masks=masks,
    )


__all__ = [
    "ROUGE_BETA",
    "canonicalize",
    "tokens_of",
    "rank_answers",
    "em_at_k",
    "exact_match_rate",
    "bleu_n",
    "rouge_l",
    "CandidateScores",
    "score_candidate",
    "MaskScores",
    "MetricsReport",
    "compute_metrics",
    "mask_scores",
    "evaluate_model",
]
