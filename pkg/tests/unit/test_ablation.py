from __future__ import annotations

import csv
import io
import json
import unittest
from pathlib import Path
from types import SimpleNamespace
from unittest.mock import patch

import pytest

from narrowqa.config import (
    ABLATION_ROWS,
    ANNOTATION_ROWS,
    ANSWER_ONLY,
    FULL_SUPERVISION,
    ConfigurationError,
    MaskSupervision,
    ModelConfig,
    TrainConfig,
)
from narrowqa.evaluation.ablation import (
    CSV_COLUMNS,
    METRIC_COLUMNS,
    load_rows,
    parse_rows,
    resolve_worker_count,
    run_ablation,
    run_annotation_study,
)

GIB = 1024**3


class ResolveWorkerCountTests(unittest.TestCase):
    def test_explicit_count_is_capped_by_jobs(self) -> None:
        self.assertEqual(resolve_worker_count(8, 5), 5)
        self.assertEqual(resolve_worker_count(2, 5), 2)

    def test_negative_count_is_rejected(self) -> None:
        with self.assertRaises(ConfigurationError):
            resolve_worker_count(-1, 5)

    @patch("narrowqa.evaluation.ablation.psutil")
    def test_auto_uses_physical_cores(self, mock_psutil) -> None:
        mock_psutil.cpu_count.return_value = 4
        mock_psutil.virtual_memory.return_value = SimpleNamespace(available=64 * GIB)
        self.assertEqual(resolve_worker_count(0, 10), 4)
        mock_psutil.cpu_count.assert_called_with(logical=False)

    @patch("narrowqa.evaluation.ablation.psutil")
    def test_auto_is_limited_by_memory(self, mock_psutil) -> None:
        mock_psutil.cpu_count.return_value = 16
        mock_psutil.virtual_memory.return_value = SimpleNamespace(available=2 * GIB)
        # (2 GB - 1 GB free) / 0.5 GB per worker
        self.assertEqual(resolve_worker_count(0, 10), 2)

    @patch("narrowqa.evaluation.ablation.psutil")
    def test_auto_never_drops_below_one(self, mock_psutil) -> None:
        mock_psutil.cpu_count.return_value = 8
        mock_psutil.virtual_memory.return_value = SimpleNamespace(available=GIB // 2)
        self.assertEqual(resolve_worker_count(0, 10), 1)


def test_parse_rows_defaults_missing_flags_to_true() -> None:
    rows = parse_rows({"rows": [{"cg": False}, {"cg": False, "fg": False, "if": False}]})
    assert [row.label for row in rows] == ["FG+IF+VQA", "VQA"]


@pytest.mark.parametrize("data", [{}, {"rows": []}, {"rows": ["cg"]}, {"rows": [{"vqa": False}]}])
def test_parse_rows_rejects_bad_input(data) -> None:
    with pytest.raises(ConfigurationError):
        parse_rows(data)


def test_load_rows(tmp_path: Path) -> None:
    assert load_rows(None) == list(ABLATION_ROWS)
    path = tmp_path / "rows.toml"
    path.write_text("[[rows]]\ncg = false\nfg = false\nif = true\n", encoding="utf-8")
    assert [row.label for row in load_rows(path)] == ["IF+VQA"]


def test_single_row_table(tiny_dataset, tmp_path: Path) -> None:
    cfg = TrainConfig(epochs=1, batch_size=8, seed=1, model=ModelConfig(d_base=8, d_phase=8, d_hidden=8))
    table = run_ablation(cfg, tiny_dataset, [ANSWER_ONLY], workers=1)

    assert table.seed == 1
    assert len(table.rows) == 1
    assert table.rows[0].flags == ANSWER_ONLY

    reader = csv.DictReader(io.StringIO(table.to_csv()))
    assert tuple(reader.fieldnames or ()) == CSV_COLUMNS
    (row,) = list(reader)
    assert row["supervision"] == "VQA"
    assert (row["cg"], row["fg"], row["if"], row["vqa"]) == ("no", "no", "no", "yes")
    assert row["best_epoch"] == "1"
    assert 0.0 <= float(row["em1"]) <= 100.0

    csv_path, json_path = table.write(tmp_path / "ablation")
    assert csv_path.read_text(encoding="utf-8") == table.to_csv()
    assert json.loads(json_path.read_text(encoding="utf-8"))["rows"][0]["supervision"] == "VQA"


def test_empty_row_list(tiny_dataset) -> None:
    with pytest.raises(ValueError):
        run_ablation(TrainConfig(epochs=1), tiny_dataset, [])


def test_annotation_study(tiny_dataset, tmp_path: Path) -> None:
    cfg = TrainConfig(epochs=1, batch_size=8, seed=1, model=ModelConfig(d_base=8, d_phase=8, d_hidden=8))
    rows = [
        ("none", ANSWER_ONLY, MaskSupervision.HIERARCHICAL),
        ("object_ids", FULL_SUPERVISION, MaskSupervision.OBJECT_IDS),
        ("boi", FULL_SUPERVISION, MaskSupervision.BOI),
    ]
    study = run_annotation_study(cfg, tiny_dataset, rows)

    assert study.names == ("none", "object_ids", "boi")
    assert [row.mask_supervision for row in study.table.rows] == [mode for _, _, mode in rows]
    csv_rows = list(csv.DictReader(io.StringIO(study.table.to_csv())))
    assert [row["mask_supervision"] for row in csv_rows] == ["-", "object_ids", "boi"]

    scores = study.scores()
    assert list(scores) == ["none", "object_ids", "boi"]
    assert set(scores["boi"]) == set(METRIC_COLUMNS)
    gamma = study.gamma()
    assert list(gamma) == ["object_ids", "boi"]
    for value in gamma["object_ids"].values():
        assert value is None or value == pytest.approx(1.0)
    assert study.format().splitlines()[0].split()[0] == "annotation"

    paths = study.write(tmp_path / "study")
    assert [p.name for p in paths] == ["ablation.csv", "ablation.json", "annotation_scores.json", "gamma.json"]
    assert json.loads(paths[2].read_text(encoding="utf-8")) == scores


def test_annotation_study_needs_reference_rows(tiny_dataset) -> None:
    rows = [("boi", FULL_SUPERVISION, MaskSupervision.BOI)]
    with pytest.raises(ConfigurationError):
        run_annotation_study(TrainConfig(epochs=1), tiny_dataset, rows)


def test_default_annotation_rows_cover_every_source() -> None:
    assert [name for name, _, _ in ANNOTATION_ROWS][:2] == ["none", "object_ids"]
    assert {mode for _, _, mode in ANNOTATION_ROWS} == set(MaskSupervision)
