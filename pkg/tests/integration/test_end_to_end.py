"""Full command-line workflow on a small synthetic world."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import pytest

from narrowqa import cli
from narrowqa.labels.label_io import read_labels
from narrowqa.scene.io import load_questions

CONFIG = """
[training]
epochs = 3
batch_size = 8
seed = 0

[model]
d_base = 8
d_phase = 8
d_hidden = 8
extractor_depth = 2
"""


@pytest.mark.slow
def test_synth_label_ablate_shortcut(tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys) -> None:
    monkeypatch.chdir(tmp_path)
    Path("small.toml").write_text(CONFIG, encoding="utf-8")
    Path("rows.toml").write_text(
        "[[rows]]\ncg = false\nfg = false\nif = false\n\n[[rows]]\n", encoding="utf-8"
    )

    assert cli.main(["synth", "--n-scenes", "10", "--seed", "1", "--out", "data"]) == cli.EXIT_OK
    assert cli.main(
        ["labelgen", "--scenes", "data/scenes", "--questions", "data/questions.jsonl", "--out", "labels.jsonl"]
    ) == cli.EXIT_OK
    labels = read_labels(Path("labels.jsonl"))
    questions = load_questions(Path("data/questions.jsonl"))
    assert [label.question_id for label in labels] == [q.question_id for q in questions]
    for label in labels:
        assert set(label.oot) <= set(label.ooi) <= set(label.boi)

    assert cli.main(["perturb", "--questions", "data/questions.jsonl", "--out", "perturbed.jsonl"]) == cli.EXIT_OK
    assert len(load_questions(Path("perturbed.jsonl"))) == len(questions)
    capsys.readouterr()

    code = cli.main(
        ["ablate", "--config", "small.toml", "--data", "data", "--rows", "rows.toml", "--out", "ablation"]
    )
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [row["supervision"] for row in rows] == ["VQA", "CG+FG+IF+VQA"]
    manifest = json.loads(Path("ablation/manifest.json").read_text(encoding="utf-8"))
    assert set(manifest["artifacts"]) == {"ablation.csv", "ablation.json"}

    code = cli.main(
        ["shortcut", "--config", "small.toml", "--data", "data", "--seeds", "0", "--out", "shortcut.json"]
    )
    assert code == cli.EXIT_OK
    report = json.loads(Path("shortcut.json").read_text(encoding="utf-8"))
    assert report["supervised"] == "CG+FG+IF+VQA"
    assert len(report["rows"]) == 1

    assert cli.main(["gradcheck", "--objects", "6"]) == cli.EXIT_OK
