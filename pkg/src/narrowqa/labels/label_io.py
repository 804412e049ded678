"""Labels JSONL writer/reader and corpus statistics."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from ..scene.records import SceneParseError
from .masks import LabelError, LabelRecord, MaskTriple

PHASES = ("boi", "ooi", "oot")


def _as_record(label: MaskTriple | LabelRecord) -> LabelRecord:
    return label.to_record() if isinstance(label, MaskTriple) else label


def label_to_mapping(label: MaskTriple | LabelRecord) -> dict[str, Any]:
    record = _as_record(label)
    return {
        "question_id": record.question_id,
        "boi": list(record.boi),
        "ooi": list(record.ooi),
        "oot": list(record.oot),
        "boi_cells": [list(cell) for cell in record.boi_cells],
        "grid_size": record.grid_size,
    }


def write_labels(labels: Iterable[MaskTriple | LabelRecord], path: Path) -> int:
    """Write one JSON line per question with sorted ids; returns the count."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for label in labels:
            fh.write(json.dumps(label_to_mapping(label), separators=(", ", ": ")) + "\n")
            count += 1
    return count


def read_labels(path: Path) -> list[LabelRecord]:
    records: list[LabelRecord] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
                records.append(
                    LabelRecord(
                        question_id=str(data["question_id"]),
                        boi=tuple(int(v) for v in data["boi"]),
                        ooi=tuple(int(v) for v in data["ooi"]),
                        oot=tuple(int(v) for v in data["oot"]),
                        boi_cells=tuple((int(r), int(c)) for r, c in data["boi_cells"]),
                        grid_size=int(data["grid_size"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                if isinstance(exc, LabelError):
                    raise LabelError(f"{path}:{line_number}: {exc}") from exc
                raise SceneParseError(str(exc), path=path, line=line_number) from exc
    return records


@dataclass(frozen=True)
class LabelStats:
    """Selected-object counts per phase over a labels corpus."""

    questions: int
    mean: dict[str, float]
    median: dict[str, float]

    def to_dict(self) -> dict[str, Any]:
        return {"questions": self.questions, "mean": dict(self.mean), "median": dict(self.median)}

    def describe(self) -> str:
        parts = [
            f"{phase.upper()} mean={self.mean[phase]:.3f} median={self.median[phase]:.1f}"
            for phase in PHASES
        ]
        return f"{self.questions} questions; " + ", ".join(parts)


def label_stats(labels: Sequence[MaskTriple | LabelRecord]) -> LabelStats:
    records = [_as_record(label) for label in labels]
    if not records:
        zeros = {phase: 0.0 for phase in PHASES}
        return LabelStats(questions=0, mean=zeros, median=dict(zeros))
    counts = {
        phase: np.asarray([len(getattr(record, phase)) for record in records], dtype=np.float64)
        for phase in PHASES
    }
    return LabelStats(
        questions=len(records),
        mean={phase: float(values.mean()) for phase, values in counts.items()},
        median={phase: float(np.median(values)) for phase, values in counts.items()},
    )


__all__ = ["PHASES", "LabelStats", "label_to_mapping", "write_labels", "read_labels", "label_stats"]
