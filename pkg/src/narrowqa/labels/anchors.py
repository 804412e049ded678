"""Anchor extraction: which non-target objects a question mentions."""

from __future__ import annotations

import re
from functools import lru_cache

from ..config import AnchorSource, LabelGenConfig
from ..scene.records import QuestionRecord, SceneRecord


@lru_cache(maxsize=512)
def _label_pattern(label: str) -> re.Pattern[str]:
    # Whole-word match with an optional plural "s".
    return re.compile(rf"(?<![a-z0-9]){re.escape(label.lower())}s?(?![a-z0-9])")


def mentions_label(question: str, label: str) -> bool:
    return _label_pattern(label).search(question.lower()) is not None


def label_match_anchors(question: QuestionRecord, scene: SceneRecord) -> set[int]:
    targets = set(question.target_ids)
    return {
        obj.id
        for obj in scene.objects
        if obj.id not in targets and mentions_label(question.question, obj.label)
    }


def extract_anchors(
    question: QuestionRecord, scene: SceneRecord, cfg: LabelGenConfig
) -> set[int]:
    """Return the anchor object ids for ``question`` under ``cfg.anchor_source``."""
    if not question.question.strip():
        raise ValueError(f"{question.question_id}: empty question")
    source = cfg.anchor_source
    if source is AnchorSource.AUTO:
        source = AnchorSource.ANNOTATION if question.anchor_ids is not None else AnchorSource.LABEL_MATCH

    annotated = set(question.anchor_ids or ())
    if source is AnchorSource.ANNOTATION:
        return annotated
    matched = label_match_anchors(question, scene)
    if source is AnchorSource.LABEL_MATCH:
        return matched
    return annotated | matched


__all__ = ["extract_anchors", "label_match_anchors", "mentions_label"]
