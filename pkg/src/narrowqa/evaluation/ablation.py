"""Supervision ablation: one training run per flag combination."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import psutil

from ..config import (
    ABLATION_ROWS,
    ANNOTATION_ROWS,
    ConfigurationError,
    MaskSupervision,
    SupervisionFlags,
    TrainConfig,
    load_config_mapping,
)
from ..progress import ProgressTracker
from ..training.dataset import build_samples, split_samples
from ..training.loop import fit
from ..training.synthetic import SyntheticDataset
from .gamma import format_gamma_table, gamma_table
from .metrics import MetricsReport, evaluate_model

_logger = logging.getLogger(__name__)

# Memory each training worker is expected to need on top of what stays free.
WORKER_MEMORY_GB = 0.5
MIN_FREE_RAM_GB = 1.0

METRIC_COLUMNS = ("em1", "em10", "bleu1", "bleu2", "bleu3", "bleu4", "rouge_l")
CSV_COLUMNS = (
    "supervision", "cg", "fg", "if", "vqa", "mask_supervision", "best_epoch", *METRIC_COLUMNS,
)


def resolve_worker_count(
    requested: int,
    jobs: int,
    *,
    worker_memory_gb: float = WORKER_MEMORY_GB,
    min_free_ram_gb: float = MIN_FREE_RAM_GB,
) -> int:
    """Number of worker processes for ``jobs`` independent training runs.

    ``requested > 0`` is used as given (capped at ``jobs``). ``0`` means
    auto: physical cores, reduced so every worker fits in the available
    memory while ``min_free_ram_gb`` stays free.
    """
    if requested < 0:
        raise ConfigurationError("workers must be >= 0")
    jobs = max(jobs, 1)
    if requested > 0:
        return min(requested, jobs)
    cores = psutil.cpu_count(logical=False) or os.cpu_count() or 1
    available_gb = psutil.virtual_memory().available / (1024**3)
    by_memory = int(max(available_gb - min_free_ram_gb, 0.0) // worker_memory_gb)
    workers = max(1, min(cores, by_memory, jobs))
    _logger.debug(
        "Auto workers: %d (cores=%d, available=%.1f GB, jobs=%d)", workers, cores, available_gb, jobs
    )
    return workers


@dataclass(frozen=True)
class AblationRow:
    flags: SupervisionFlags
    best_epoch: int
    metrics: MetricsReport
    mask_supervision: MaskSupervision = MaskSupervision.HIERARCHICAL

    def scores(self) -> dict[str, float]:
        """Metric columns scaled by 100."""
        data = self.metrics.to_dict()
        return {key: data[key] for key in METRIC_COLUMNS}

    def to_dict(self) -> dict[str, Any]:
        return {
            "supervision": self.flags.label,
            **self.flags.to_mapping(),
            "mask_supervision": self.mask_supervision.value if self.flags.any_mask else "-",
            "best_epoch": self.best_epoch,
            **self.scores(),
        }


@dataclass(frozen=True)
class AblationTable:
    rows: tuple[AblationRow, ...]
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return {"seed": self.seed, "rows": [row.to_dict() for row in self.rows]}

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            data = row.to_dict()
            writer.writerow({key: _csv_cell(data[key]) for key in CSV_COLUMNS})
        return buffer.getvalue()

    def write(self, out_dir: Path) -> list[Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path = out_dir / "ablation.csv"
        json_path = out_dir / "ablation.json"
        csv_path.write_text(self.to_csv(), encoding="utf-8")
        json_path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        return [csv_path, json_path]


def _csv_cell(value: Any) -> Any:
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.2f}"
    return value


def _run_row(cfg: TrainConfig, data: SyntheticDataset) -> AblationRow:
    samples = build_samples(data, cfg.labelgen)
    result = fit(cfg, data, samples=samples)
    _, held_out = split_samples(samples)
    report = evaluate_model(result.model, held_out or samples, data.vocab)
    return AblationRow(
        flags=cfg.flags,
        best_epoch=result.best_epoch,
        metrics=report,
        mask_supervision=cfg.mask_supervision,
    )


def _run_configs(
    configs: Sequence[TrainConfig], names: Sequence[str], data: SyntheticDataset, workers: int
) -> list[AblationRow]:
    count = resolve_worker_count(workers, len(configs))
    tracker = ProgressTracker(len(configs))
    results: list[AblationRow] = []
    if count == 1:
        for name, run_cfg in zip(names, configs):
            results.append(_run_row(run_cfg, data))
            tracker.advance(_logger, f"{name}: EM@1 {results[-1].metrics.em1:.3f}")
    else:
        with ProcessPoolExecutor(max_workers=count) as pool:
            for name, row in zip(names, pool.map(_run_row, configs, [data] * len(configs))):
                results.append(row)
                tracker.advance(_logger, f"{name}: EM@1 {row.metrics.em1:.3f}")
    return results


def run_ablation(
    cfg: TrainConfig,
    data: SyntheticDataset,
    rows: Sequence[SupervisionFlags] = ABLATION_ROWS,
    *,
    workers: int = 1,
) -> AblationTable:
    """Train one model per supervision row with shared seed and data; rows keep input order."""
    if not rows:
        raise ValueError("at least one ablation row is required")
    configs = [replace(cfg, flags=flags) for flags in rows]
    results = _run_configs(configs, [flags.label for flags in rows], data, workers)
    return AblationTable(rows=tuple(results), seed=cfg.seed)


@dataclass(frozen=True)
class AnnotationStudy:
    """One run per annotation source and the improvement ratios they give.

    Attributes:
        names: Row names, ``none`` and ``object_ids`` first
        table: The runs in the same order as ``names``
    """

    names: tuple[str, ...]
    table: AblationTable

    def scores(self) -> dict[str, dict[str, float]]:
        return {name: row.scores() for name, row in zip(self.names, self.table.rows)}

    def gamma(self) -> dict[str, dict[str, float | None]]:
        return gamma_table(self.scores())

    def format(self) -> str:
        return format_gamma_table(self.gamma())

    def write(self, out_dir: Path) -> list[Path]:
        out_dir = Path(out_dir)
        files = self.table.write(out_dir)
        scores_path = out_dir / "annotation_scores.json"
        gamma_path = out_dir / "gamma.json"
        scores_path.write_text(json.dumps(self.scores(), indent=2) + "\n", encoding="utf-8")
        gamma_path.write_text(json.dumps(self.gamma(), indent=2) + "\n", encoding="utf-8")
        return [*files, scores_path, gamma_path]


def run_annotation_study(
    cfg: TrainConfig,
    data: SyntheticDataset,
    rows: Sequence[tuple[str, SupervisionFlags, MaskSupervision]] = ANNOTATION_ROWS,
    *,
    workers: int = 1,
) -> AnnotationStudy:
    """Train once per annotation source (no mask, object ids, BoI, OoI, OoT, ...)."""
    names = [name for name, _, _ in rows]
    if "none" not in names or "object_ids" not in names:
        raise ConfigurationError("annotation rows need 'none' and 'object_ids' entries")
    if len(set(names)) != len(names):
        raise ConfigurationError("annotation row names must be unique")
    configs = [replace(cfg, flags=flags, mask_supervision=mode) for _, flags, mode in rows]
    results = _run_configs(configs, names, data, workers)
    return AnnotationStudy(names=tuple(names), table=AblationTable(rows=tuple(results), seed=cfg.seed))


def parse_rows(data: Mapping[str, Any]) -> list[SupervisionFlags]:
    """Rows from a mapping with a ``rows`` array of ``{cg, fg, if}`` tables."""
    raw = data.get("rows")
    if not isinstance(raw, list) or not raw:
        raise ConfigurationError("rows file must define a non-empty 'rows' array")
    rows: list[SupervisionFlags] = []
    for entry in raw:
        if not isinstance(entry, dict):
            raise ConfigurationError("each row must be a table of supervision flags")
        rows.append(SupervisionFlags.from_mapping(entry))
    return rows


def load_rows(path: Path | None) -> list[SupervisionFlags]:
    if path is None:
        return list(ABLATION_ROWS)
    return parse_rows(load_config_mapping(path))


__all__ = [
    "METRIC_COLUMNS",
    "CSV_COLUMNS",
    "resolve_worker_count",
    "AblationRow",
    "AblationTable",
    "run_ablation",
    "AnnotationStudy",
    "run_annotation_study",
    "parse_rows",
    "load_rows",
]
