"""Metrics, improvement ratios, shortcut probing and ablations."""

from __future__ import annotations

from .ablation import (
    AblationTable,
    AnnotationStudy,
    load_rows,
    resolve_worker_count,
    run_ablation,
    run_annotation_study,
)
from .gamma import ZeroDenominatorError, gamma_table, improvement_ratio
from .metrics import (
    MetricsReport,
    bleu_n,
    canonicalize,
    compute_metrics,
    em_at_k,
    evaluate_model,
    rank_answers,
    rouge_l,
)
from .perturb import (
    PerturbationLexicon,
    ShortcutProbeReport,
    ShortcutResult,
    default_lexicon,
    load_lexicon,
    perturb_questions,
    run_shortcut_probe,
    shortcut_degradation,
)

__all__ = [
    # Metrics
    "MetricsReport",
    "canonicalize",
    "rank_answers",
    "em_at_k",
    "bleu_n",
    "rouge_l",
    "compute_metrics",
    "evaluate_model",
    # Improvement ratio
    "ZeroDenominatorError",
    "improvement_ratio",
    "gamma_table",
    # Perturbation
    "PerturbationLexicon",
    "load_lexicon",
    "default_lexicon",
    "perturb_questions",
    "ShortcutResult",
    "ShortcutProbeReport",
    "shortcut_degradation",
    "run_shortcut_probe",
    # Ablation
    "AblationTable",
    "run_ablation",
    "AnnotationStudy",
    "run_annotation_study",
    "load_rows",
    "resolve_worker_count",
]
