from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any, NoReturn, Sequence

from . import __version__
from .autodiff.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import (
    AnchorSource,
    ConfigurationError,
    LabelGenConfig,
    ModelConfig,
    SyntheticSpec,
    TrainConfig,
    load_config_mapping,
    load_synthetic_spec,
)
from .evaluation.ablation import load_rows, run_ablation, run_annotation_study
from .evaluation.gamma import ZeroDenominatorError, format_gamma_table, gamma_table, improvement_ratio
from .evaluation.metrics import evaluate_model
from .evaluation.perturb import (
    default_lexicon,
    load_lexicon,
    perturb_questions,
    run_shortcut_probe,
    shortcut_degradation,
)
from .labels.label_io import label_stats, write_labels
from .labels.masks import LabelError, generate_corpus_labels
from .manifest import build_manifest, write_manifest
from .model.flops import count_flops
from .model.network import HCNModel
from .progress import log_summary
from .scene.io import load_questions, load_scene_dir, write_questions
from .scene.records import SceneDataError
from .training.dataset import build_samples, load_dataset, save_dataset, split_samples
from .training.loop import TrainingDivergedError, fit, toy_gradcheck, write_training_log
from .training.synthetic import Featurizer, make_synthetic_dataset

DEFAULT_CONFIG = Path("narrowqa.toml")
_LOGGER = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

_VALIDATION_ERRORS = (
    ConfigurationError,
    SceneDataError,
    LabelError,
    CheckpointError,
    FileNotFoundError,
    NotADirectoryError,
)


class _ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with the validation exit code."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _add_seed(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed", type=int, default=None, help="Seed for all randomness (overrides the config file)"
    )


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help=f"TOML or JSON configuration file (default: {DEFAULT_CONFIG} when present)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="narrowqa",
        description="Hierarchical mask supervision for question answering over segmented scenes",
    )
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"],
        default="INFO",
        help="Set the root log level",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    labelgen = commands.add_parser("labelgen", help="Generate BoI/OoI/OoT labels for a question file")
    labelgen.add_argument("--scenes", type=Path, required=True, help="Directory of scene JSON files")
    labelgen.add_argument("--questions", type=Path, required=True, help="Questions JSONL file")
    labelgen.add_argument("--grid-size", type=int, default=5, help="S for the S x S grid (default: 5)")
    labelgen.add_argument(
        "--anchor-source",
        choices=[source.value for source in AnchorSource],
        default=AnchorSource.AUTO.value,
        help="Where anchors come from (default: auto)",
    )
    labelgen.add_argument("--out", type=Path, required=True, help="Output labels JSONL file")

    synth = commands.add_parser("synth", help="Generate a synthetic scene/question dataset")
    synth.add_argument("--spec", type=Path, default=None, help="Spec file ([synthetic] section)")
    synth.add_argument("--n-scenes", type=int, default=None, help="Override the number of scenes")
    synth.add_argument("--out", type=Path, required=True, help="Output dataset directory")
    _add_seed(synth)

    train = commands.add_parser("train", help="Train a model on a dataset directory")
    _add_config(train)
    train.add_argument("--data", type=Path, required=True, help="Dataset directory")
    train.add_argument("--out", type=Path, required=True, help="Output run directory")
    train.add_argument("--epochs", type=int, default=None, help="Override training.epochs")
    _add_seed(train)

    evaluate = commands.add_parser("eval", help="Evaluate a checkpoint on a dataset directory")
    evaluate.add_argument("--ckpt", type=Path, required=True, help="Checkpoint file")
    evaluate.add_argument("--data", type=Path, required=True, help="Dataset directory")
    evaluate.add_argument(
        "--split", choices=["val", "all"], default="val", help="Questions to score (default: val)"
    )
    evaluate.add_argument(
        "--lexicon", type=Path, default=None, help="Also report EM@1 drop under this synonym lexicon"
    )
    evaluate.add_argument("--out", type=Path, default=None, help="Also write the report to this file")
    _add_seed(evaluate)

    perturb = commands.add_parser("perturb", help="Apply synonym substitution to a question file")
    perturb.add_argument("--lexicon", type=Path, default=None, help="Lexicon JSON (default: bundled)")
    perturb.add_argument("--questions", type=Path, required=True, help="Questions JSONL file")
    perturb.add_argument("--out", type=Path, required=True, help="Output questions JSONL file")
    _add_seed(perturb)

    ablate = commands.add_parser("ablate", help="Train one model per supervision row")
    _add_config(ablate)
    ablate.add_argument("--data", type=Path, required=True, help="Dataset directory")
    rows = ablate.add_mutually_exclusive_group()
    rows.add_argument("--rows", type=Path, default=None, help="Rows file (default: five-row grid)")
    rows.add_argument(
        "--preset",
        choices=("grid", "annotation"),
        default="grid",
        help="grid: supervision flag grid; annotation: one run per mask annotation plus gamma",
    )
    ablate.add_argument("--out", type=Path, required=True, help="Output directory")
    ablate.add_argument("--workers", type=int, default=1, help="Worker processes, 0 = auto")
    _add_seed(ablate)

    check = commands.add_parser("gradcheck", help="Finite-difference check of the full training loss")
    check.add_argument("--objects", type=int, default=6, help="Objects in the toy scene (default: 6)")
    check.add_argument("--step", type=float, default=1e-5, help="Central-difference step")
    check.add_argument("--tol", type=float, default=1e-4, help="Maximum relative error")
    _add_seed(check)

    flops = commands.add_parser("flops", help="Count forward-pass FLOPs")
    _add_config(flops)
    flops.add_argument(
        "--backbone-flops", type=float, default=math.inf, help="Backbone budget for the HSM ratio"
    )
    flops.add_argument("--objects", type=int, default=8, help="Objects per scene (default: 8)")
    flops.add_argument("--text-len", type=int, default=10, help="Question tokens (default: 10)")

    gamma = commands.add_parser("gamma", help="Improvement ratio of annotations over object ids")
    source = gamma.add_mutually_exclusive_group(required=True)
    source.add_argument("--scores", type=Path, help="Score table (rows none, object_ids, ...)")
    source.add_argument(
        "--triplet",
        type=float,
        nargs=3,
        metavar=("NONE", "OBJECT_IDS", "MASK"),
        help="Single score triplet",
    )

    shortcut = commands.add_parser("shortcut", help="Compare EM@1 drops under synonym substitution")
    _add_config(shortcut)
    shortcut.add_argument("--data", type=Path, required=True, help="Dataset directory")
    shortcut.add_argument("--lexicon", type=Path, default=None, help="Lexicon JSON (default: bundled)")
    shortcut.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2], help="Training seeds")
    shortcut.add_argument("--out", type=Path, default=None, help="Write the report JSON here")
    return parser


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def _train_config(args: argparse.Namespace) -> tuple[TrainConfig, dict[str, Any]]:
    path = args.config
    if path is None and DEFAULT_CONFIG.exists():
        path = DEFAULT_CONFIG
    if path is None:
        cfg = TrainConfig()
    else:
        _LOGGER.info("Using config: %s", path)
        cfg = TrainConfig.from_mapping(load_config_mapping(path))
    cfg = cfg.with_seed(getattr(args, "seed", None))
    if getattr(args, "epochs", None) is not None:
        cfg = replace(cfg, epochs=args.epochs)
    return cfg, cfg.to_dict()


def _print_json(data: Any) -> None:
    sys.stdout.write(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_json(path: Path, data: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _cmd_labelgen(args: argparse.Namespace, argv: Sequence[str]) -> int:
    if args.grid_size < 1:
        raise ConfigurationError("--grid-size must be >= 1")
    cfg = LabelGenConfig(grid_size=args.grid_size, anchor_source=AnchorSource(args.anchor_source))
    scenes = load_scene_dir(args.scenes)
    questions = load_questions(args.questions, scenes)
    labels = generate_corpus_labels(scenes, questions, cfg)
    count = write_labels(labels, args.out)
    _LOGGER.info("Wrote %d labels to %s", count, args.out)
    _LOGGER.info("%s", label_stats(labels).describe())
    no_anchor = [label.question_id for label in labels if sum(label.ooi) == sum(label.oot)]
    log_summary(_LOGGER.debug, "Questions without anchors", no_anchor)
    return EXIT_OK


def _cmd_synth(args: argparse.Namespace, argv: Sequence[str]) -> int:
    spec = load_synthetic_spec(args.spec) if args.spec is not None else SyntheticSpec()
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.n_scenes is not None:
        spec = replace(spec, n_scenes=args.n_scenes)
    data = make_synthetic_dataset(spec, progress=True)
    files = save_dataset(data, args.out)
    manifest = build_manifest(
        argv, seed=spec.seed, config=spec.to_dict(), artifacts=files, base_dir=args.out
    )
    write_manifest(args.out, manifest)
    _LOGGER.info("Wrote %d scenes and %d questions to %s", len(data.scenes), len(data.questions), args.out)
    return EXIT_OK


def _cmd_train(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg, config_map = _train_config(args)
    data = load_dataset(args.data)
    samples = build_samples(data, cfg.labelgen)
    result = fit(cfg, data, samples=samples, progress=True)

    out: Path = args.out
    _, held_out = split_samples(samples)
    report = evaluate_model(result.model, held_out or samples, data.vocab)
    checkpoint = out / "checkpoint.json"
    save_checkpoint(
        checkpoint,
        result.model.params,
        meta={
            "model": result.model.cfg.to_dict(),
            "train": config_map,
            "best_epoch": result.best_epoch,
            "best_val_em1": result.best_val_em1,
        },
    )
    log_path = out / "train_log.jsonl"
    write_training_log(result.log, log_path)
    metrics_path = _write_json(out / "metrics.json", report.to_dict())
    config_path = _write_json(out / "config.json", config_map)
    manifest = build_manifest(
        argv,
        seed=cfg.seed,
        config=config_map,
        artifacts=[checkpoint, log_path, metrics_path, config_path],
        base_dir=out,
    )
    write_manifest(out, manifest)
    _LOGGER.info("Best epoch %d, validation EM@1 %.3f", result.best_epoch, result.best_val_em1)
    _print_json(report.to_dict())
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace, argv: Sequence[str]) -> int:
    params, meta = load_checkpoint(args.ckpt)
    if "model" not in meta:
        raise CheckpointError(f"{args.ckpt}: checkpoint has no model configuration")
    model_cfg = ModelConfig.from_mapping(meta["model"])
    train_cfg = TrainConfig.from_mapping(meta.get("train", {}))
    try:
        model = HCNModel(model_cfg, params)
    except ValueError as exc:
        raise CheckpointError(f"{args.ckpt}: {exc}") from exc

    data = load_dataset(args.data)
    featurizer = Featurizer(data.spec)
    if (model_cfg.d_obj, model_cfg.d_text, model_cfg.answer_vocab_size) != (
        featurizer.d_obj, featurizer.d_text, len(data.vocab)
    ):
        raise ConfigurationError("checkpoint and dataset disagree on token widths or vocabulary")
    samples = build_samples(data, train_cfg.labelgen)
    if args.split == "val":
        _, held_out = split_samples(samples)
        samples = held_out or samples
    output: dict[str, Any] = {
        "split": args.split,
        "metrics": evaluate_model(model, samples, data.vocab).to_dict(),
    }
    if args.lexicon is not None:
        lexicon = load_lexicon(args.lexicon, seed=args.seed or 0)
        output["shortcut"] = shortcut_degradation(model, data, samples, lexicon, train_cfg).to_dict()
    if args.out is not None:
        _write_json(args.out, output)
    _print_json(output)
    return EXIT_OK


def _cmd_perturb(args: argparse.Namespace, argv: Sequence[str]) -> int:
    seed = args.seed or 0
    lexicon = load_lexicon(args.lexicon, seed=seed) if args.lexicon else default_lexicon(seed)
    questions = load_questions(args.questions)
    perturbed = perturb_questions(questions, lexicon)
    write_questions(perturbed, args.out)
    changed = sum(a.question != b.question for a, b in zip(questions, perturbed))
    _LOGGER.info("Perturbed %d of %d questions into %s", changed, len(questions), args.out)
    return EXIT_OK


def _cmd_ablate(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg, config_map = _train_config(args)
    if args.rows is None and args.preset == "annotation":
        return _annotation_study(args, argv, cfg, config_map)
    rows = load_rows(args.rows)
    data = load_dataset(args.data)
    table = run_ablation(cfg, data, rows, workers=args.workers)
    files = table.write(args.out)
    config_map = {**config_map, "rows": [row.to_mapping() for row in rows]}
    write_manifest(
        args.out,
        build_manifest(argv, seed=cfg.seed, config=config_map, artifacts=files, base_dir=args.out),
    )
    sys.stdout.write(table.to_csv())
    return EXIT_OK


def _annotation_study(
    args: argparse.Namespace, argv: Sequence[str], cfg: TrainConfig, config_map: dict[str, Any]
) -> int:
    data = load_dataset(args.data)
    study = run_annotation_study(cfg, data, workers=args.workers)
    files = study.write(args.out)
    config_map = {**config_map, "preset": "annotation", "rows": list(study.names)}
    write_manifest(
        args.out,
        build_manifest(argv, seed=cfg.seed, config=config_map, artifacts=files, base_dir=args.out),
    )
    sys.stdout.write(study.table.to_csv())
    sys.stdout.write(study.format() + "\n")
    return EXIT_OK


def _cmd_gradcheck(args: argparse.Namespace, argv: Sequence[str]) -> int:
    report = toy_gradcheck(
        seed=args.seed or 0, n_objects=args.objects, step=args.step, tolerance=args.tol
    )
    _print_json(report.to_dict())
    if not report.passed:
        log_summary(_LOGGER.error, "Parameters failing the gradient check", [e.name for e in report.failures])
        return EXIT_RUNTIME
    _LOGGER.info("Gradient check passed, max relative error %.2e", report.max_rel_error)
    return EXIT_OK


def _cmd_flops(args: argparse.Namespace, argv: Sequence[str]) -> int:
    if args.backbone_flops <= 0:
        raise ConfigurationError("--backbone-flops must be positive")
    model_cfg = ModelConfig()
    if args.config is not None:
        model_cfg = ModelConfig.from_mapping(load_config_mapping(args.config).get("model", {}))
    if not model_cfg.is_resolved:
        spec = SyntheticSpec()
        featurizer = Featurizer(spec)
        model_cfg = replace(
            model_cfg,
            d_obj=model_cfg.d_obj or featurizer.d_obj,
            d_text=model_cfg.d_text or featurizer.d_text,
            answer_vocab_size=model_cfg.answer_vocab_size or len(spec.labels) + len(spec.colors),
        )
    _print_json(count_flops(model_cfg, args.objects, args.text_len, args.backbone_flops).to_dict())
    return EXIT_OK


def _cmd_gamma(args: argparse.Namespace, argv: Sequence[str]) -> int:
    if args.triplet is not None:
        none, object_ids, mask = args.triplet
        sys.stdout.write(f"{improvement_ratio(none, object_ids, mask):.2f}\n")
        return EXIT_OK
    scores = load_config_mapping(args.scores)
    try:
        table = gamma_table(scores)
    except KeyError as exc:
        raise ConfigurationError(str(exc)) from exc
    sys.stdout.write(format_gamma_table(table) + "\n")
    return EXIT_OK


def _cmd_shortcut(args: argparse.Namespace, argv: Sequence[str]) -> int:
    cfg, _ = _train_config(args)
    lexicon = load_lexicon(args.lexicon, seed=cfg.seed) if args.lexicon else default_lexicon(cfg.seed)
    data = load_dataset(args.data)
    report = run_shortcut_probe(cfg, data, lexicon, args.seeds)
    if args.out is not None:
        _write_json(args.out, report.to_dict())
    sys.stdout.write(report.format() + "\n")
    return EXIT_OK


_COMMANDS = {
    "labelgen": _cmd_labelgen,
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "perturb": _cmd_perturb,
    "ablate": _cmd_ablate,
    "gradcheck": _cmd_gradcheck,
    "flops": _cmd_flops,
    "gamma": _cmd_gamma,
    "shortcut": _cmd_shortcut,
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(message)s")

    try:
        return _COMMANDS[args.command](args, argv)
    except _VALIDATION_ERRORS as exc:
        _LOGGER.error("Validation error: %s", exc)
        return EXIT_VALIDATION
    except TrainingDivergedError as exc:
        _LOGGER.error("Training diverged: %s", exc)
        return EXIT_RUNTIME
    except ZeroDenominatorError as exc:
        _LOGGER.error("Cannot compute gamma: %s", exc)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001
        _LOGGER.error("Unexpected error: %s", exc, exc_info=args.log_level == "DEBUG")
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
