"""Hierarchical pseudo-label generation (BoI, OoI, OoT)."""

from __future__ import annotations

from .anchors import extract_anchors, label_match_anchors, mentions_label
from .grid import CellIndex, cell_of_point, cells_of_points
from .label_io import LabelStats, label_stats, read_labels, write_labels
from .masks import (
    LabelError,
    LabelRecord,
    MaskTriple,
    compute_boi,
    compute_ooi,
    compute_oot,
    generate_corpus_labels,
    generate_labels,
)

__all__ = [
    "CellIndex",
    "cell_of_point",
    "cells_of_points",
    "extract_anchors",
    "label_match_anchors",
    "mentions_label",
    "LabelError",
    "LabelRecord",
    "MaskTriple",
    "compute_boi",
    "compute_ooi",
    "compute_oot",
    "generate_labels",
    "generate_corpus_labels",
    "LabelStats",
    "label_stats",
    "read_labels",
    "write_labels",
]
