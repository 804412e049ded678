"""Improvement ratio of a candidate annotation over object-id supervision."""

from __future__ import annotations

from typing import Mapping

NONE_ROW = "none"
OBJECT_IDS_ROW = "object_ids"


class ZeroDenominatorError(ZeroDivisionError):
    """Raised when object-id supervision gives no gain over no supervision."""


def improvement_ratio(score_none: float, score_objectids: float, score_mask: float) -> float:
    """``(mask - none) / (object_ids - none)``."""
    denominator = score_objectids - score_none
    if denominator == 0:
        raise ZeroDenominatorError(
            f"object-id score {score_objectids} equals the no-mask score {score_none}"
        )
    return (score_mask - score_none) / denominator


def gamma_table(
    scores: Mapping[str, Mapping[str, float]],
) -> dict[str, dict[str, float | None]]:
    """gamma for every row and metric of a score table.

    ``scores`` maps row names to metric columns and must contain the
    ``none`` and ``object_ids`` rows. Metrics where the two reference rows
    tie come out as None.
    """
    for required in (NONE_ROW, OBJECT_IDS_ROW):
        if required not in scores:
            raise KeyError(f"score table needs a '{required}' row")
    base, reference = scores[NONE_ROW], scores[OBJECT_IDS_ROW]
    table: dict[str, dict[str, float | None]] = {}
    for row, metrics in scores.items():
        if row == NONE_ROW:
            continue
        ratios: dict[str, float | None] = {}
        for metric, value in metrics.items():
            if metric not in base or metric not in reference:
                raise KeyError(f"metric '{metric}' missing from the reference rows")
            try:
                ratios[metric] = improvement_ratio(base[metric], reference[metric], value)
            except ZeroDenominatorError:
                ratios[metric] = None
        table[row] = ratios
    return table


def format_gamma_table(table: Mapping[str, Mapping[str, float | None]]) -> str:
    """Plain-text table, two decimals, one row per annotation."""
    metrics: list[str] = []
    for row in table.values():
        for metric in row:
            if metric not in metrics:
                metrics.append(metric)
    width = max([len("annotation")] + [len(row) for row in table])
    lines = ["  ".join(["annotation".ljust(width)] + [m.rjust(8) for m in metrics])]
    for name, row in table.items():
        cells = []
        for metric in metrics:
            value = row.get(metric)
            cells.append(("-" if value is None else f"{value:.2f}").rjust(8))
        lines.append("  ".join([name.ljust(width)] + cells))
    return "\n".join(lines)


__all__ = [
    "NONE_ROW",
    "OBJECT_IDS_ROW",
    "ZeroDenominatorError",
    "improvement_ratio",
    "gamma_table",
    "format_gamma_table",
]
