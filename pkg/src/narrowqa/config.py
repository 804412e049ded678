"""Configuration handling for narrowqa."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - fallback for older versions
    tomllib = None  # type: ignore[assignment]


class ConfigurationError(RuntimeError):
    """Raised when configuration values are missing or invalid."""


class AnchorSource(str, Enum):
    """Where anchor objects for a question come from."""

    AUTO = "auto"
    ANNOTATION = "annotation"
    LABEL_MATCH = "label_match"
    UNION = "union"


class MaskMode(str, Enum):
    """How the answer head consumes the inference-phase mask."""

    SOFT = "soft"
    HARD = "hard"


class MaskSupervision(str, Enum):
    """Which labels supervise the mask heads.

    ``hierarchical`` supervises all three heads; the other sources each
    supervise a single head with a single annotation.
    """

    HIERARCHICAL = "hierarchical"
    OBJECT_IDS = "object_ids"
    BOI = "boi"
    OOI = "ooi"
    OOT = "oot"


@dataclass(frozen=True)
class LabelGenConfig:
    """Pseudo-label generation settings.

    Attributes:
        grid_size: S, the scene is split into an S x S grid over its x-y bbox
        anchor_source: Anchor extraction mode; ``auto`` uses the annotation
            when a question carries anchor ids and label matching otherwise
    """

    grid_size: int = 5
    anchor_source: AnchorSource = AnchorSource.AUTO

    def __post_init__(self) -> None:
        if self.grid_size < 1:
            raise ConfigurationError("grid_size must be >= 1")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "LabelGenConfig":
        return cls(
            grid_size=_read_int(data, "grid_size", default=5, minimum=1),
            anchor_source=AnchorSource(
                _read_choice(data, "anchor_source", AnchorSource, default=AnchorSource.AUTO.value)
            ),
        )


@dataclass(frozen=True)
class ModelConfig:
    """Widths and depths of the supervised model.

    ``d_obj``, ``d_text`` and ``answer_vocab_size`` may be left at 0 in a
    config file; they are filled in from the dataset with ``resolved``.
    """

    d_obj: int = 0
    d_text: int = 0
    d_base: int = 32
    d_phase: int = 32
    d_hidden: int = 64
    extractor_depth: int = 4
    phase_depth: int = 2
    answer_vocab_size: int = 0
    mask_mode: MaskMode = MaskMode.SOFT
    threshold: float = 0.5

    def __post_init__(self) -> None:
        for name in ("d_base", "d_phase", "d_hidden", "extractor_depth", "phase_depth"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"model.{name} must be >= 1")
        for name in ("d_obj", "d_text", "answer_vocab_size"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"model.{name} must be >= 0")
        if self.mask_mode is MaskMode.HARD and not 0.0 < self.threshold < 1.0:
            raise ConfigurationError("model.threshold must lie in (0, 1) for hard masks")

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["mask_mode"] = self.mask_mode.value
        return data

    @property
    def is_resolved(self) -> bool:
        return min(self.d_obj, self.d_text, self.answer_vocab_size) >= 1

    def resolved(self, *, d_obj: int, d_text: int, answer_vocab_size: int) -> "ModelConfig":
        """Fill data-dependent widths left at 0; explicit values must agree."""
        updates: dict[str, int] = {}
        for name, value in (
            ("d_obj", d_obj),
            ("d_text", d_text),
            ("answer_vocab_size", answer_vocab_size),
        ):
            current = getattr(self, name)
            if current == 0:
                updates[name] = value
            elif current != value:
                raise ConfigurationError(
                    f"model.{name} is {current} but the dataset provides {value}"
                )
        return replace(self, **updates)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "ModelConfig":
        defaults = cls()
        extractor_depth = _read_int(data, "extractor_depth", default=4, minimum=1)
        return cls(
            d_obj=_read_int(data, "d_obj", default=defaults.d_obj, minimum=0),
            d_text=_read_int(data, "d_text", default=defaults.d_text, minimum=0),
            d_base=_read_int(data, "d_base", default=defaults.d_base, minimum=1),
            d_phase=_read_int(data, "d_phase", default=defaults.d_phase, minimum=1),
            d_hidden=_read_int(data, "d_hidden", default=defaults.d_hidden, minimum=1),
            extractor_depth=extractor_depth,
            phase_depth=_read_int(data, "phase_depth", default=defaults.phase_depth, minimum=1),
            answer_vocab_size=_read_int(data, "answer_vocab_size", default=0, minimum=0),
            mask_mode=MaskMode(_read_choice(data, "mask_mode", MaskMode, default="soft")),
            threshold=_read_float(data, "threshold", default=0.5, minimum=0.0),
        )


@dataclass(frozen=True)
class LossWeights:
    """Phase weights for L_HSM and the answer-loss weight."""

    cg: float = 0.2
    fg: float = 0.3
    if_: float = 0.5
    ans: float = 1.0

    def __post_init__(self) -> None:
        values = (self.cg, self.fg, self.if_, self.ans)
        if any(value < 0 for value in values):
            raise ConfigurationError("loss weights must be non-negative")
        if not any(values):
            raise ConfigurationError("at least one loss weight must be positive")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "LossWeights":
        return cls(
            cg=_read_float(data, "lambda_cg", default=0.2, minimum=0.0),
            fg=_read_float(data, "lambda_fg", default=0.3, minimum=0.0),
            if_=_read_float(data, "lambda_if", default=0.5, minimum=0.0),
            ans=_read_float(data, "lambda_ans", default=1.0, minimum=0.0),
        )


@dataclass(frozen=True)
class SupervisionFlags:
    """Which heads receive a training signal. VQA is always supervised."""

    cg: bool = True
    fg: bool = True
    if_: bool = True
    vqa: bool = True

    def __post_init__(self) -> None:
        if not self.vqa:
            raise ConfigurationError("supervision.vqa must be true")

    @property
    def label(self) -> str:
        parts = [name for name, on in (("CG", self.cg), ("FG", self.fg), ("IF", self.if_)) if on]
        return "+".join(parts + ["VQA"])

    @property
    def any_mask(self) -> bool:
        return self.cg or self.fg or self.if_

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SupervisionFlags":
        return cls(
            cg=_read_bool(data, "cg", default=True),
            fg=_read_bool(data, "fg", default=True),
            if_=_read_bool(data, "if", default=_read_bool(data, "if_", default=True)),
            vqa=_read_bool(data, "vqa", default=True),
        )

    def to_mapping(self) -> dict[str, bool]:
        return {"cg": self.cg, "fg": self.fg, "if": self.if_, "vqa": self.vqa}


ANSWER_ONLY = SupervisionFlags(cg=False, fg=False, if_=False)
FULL_SUPERVISION = SupervisionFlags()

# Supervision grid of the ablation protocol, in report order.
ABLATION_ROWS: tuple[SupervisionFlags, ...] = (
    ANSWER_ONLY,
    SupervisionFlags(cg=True, fg=True, if_=False),
    SupervisionFlags(cg=True, fg=False, if_=True),
    SupervisionFlags(cg=False, fg=True, if_=True),
    FULL_SUPERVISION,
)

# Annotation comparison runs: (row name, head flags, label source). The
# "none" and "object_ids" rows are the references of the improvement ratio.
ANNOTATION_ROWS: tuple[tuple[str, SupervisionFlags, MaskSupervision], ...] = (
    ("none", ANSWER_ONLY, MaskSupervision.HIERARCHICAL),
    ("object_ids", FULL_SUPERVISION, MaskSupervision.OBJECT_IDS),
    ("boi", FULL_SUPERVISION, MaskSupervision.BOI),
    ("ooi", FULL_SUPERVISION, MaskSupervision.OOI),
    ("oot", FULL_SUPERVISION, MaskSupervision.OOT),
    ("hierarchical", FULL_SUPERVISION, MaskSupervision.HIERARCHICAL),
)


@dataclass(frozen=True)
class ShortcutBait:
    """Biases relation questions about ``trigger_label`` towards ``answer``."""

    trigger_label: str
    answer: str
    rate: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.rate <= 1.0:
            raise ConfigurationError("shortcut_bait.rate must lie in [0, 1]")
        if self.trigger_label == self.answer:
            raise ConfigurationError("shortcut_bait.answer must differ from trigger_label")


def default_synonyms() -> dict[str, tuple[str, ...]]:
    """Synonym table shipped with the package (also the default lexicon)."""
    text = resources.files("narrowqa.data").joinpath("synonyms.json").read_text(encoding="utf-8")
    return {key: tuple(values) for key, values in json.loads(text).items()}


_DEFAULT_LABELS = ("chair", "table", "sofa", "bed", "lamp", "cabinet", "shelf", "plant")
_DEFAULT_COLORS = ("red", "blue", "green", "brown", "white", "black")
TEMPLATES = ("color", "relation")


@dataclass(frozen=True)
class SyntheticSpec:
    """Procedural scene/question corpus description."""

    n_scenes: int = 500
    objects_min: int = 4
    objects_max: int = 8
    labels: tuple[str, ...] = _DEFAULT_LABELS
    colors: tuple[str, ...] = _DEFAULT_COLORS
    synonyms: Mapping[str, tuple[str, ...]] = field(default_factory=default_synonyms)
    templates: tuple[str, ...] = TEMPLATES
    extent: float = 8.0
    points_per_object: int = 16
    background_points: int = 48
    noise: float = 0.01
    d_text: int = 16
    seed: int = 0
    shortcut_bait: ShortcutBait | None = None

    def __post_init__(self) -> None:
        if self.n_scenes < 1:
            raise ConfigurationError("synthetic.n_scenes must be >= 1")
        if not 3 <= self.objects_min <= self.objects_max:
            raise ConfigurationError("synthetic needs 3 <= objects_min <= objects_max")
        if len(self.labels) < 2 or not self.colors:
            raise ConfigurationError("synthetic label pool needs >= 2 labels and >= 1 color")
        if len(set(self.labels)) != len(self.labels) or len(set(self.colors)) != len(self.colors):
            raise ConfigurationError("synthetic label and color pools must be unique")
        if set(self.labels) & set(self.colors):
            raise ConfigurationError("synthetic labels and colors must not overlap")
        if not self.templates or any(t not in TEMPLATES for t in self.templates):
            raise ConfigurationError(f"synthetic.templates must be drawn from {TEMPLATES}")
        if self.extent < 4.0:
            raise ConfigurationError("synthetic.extent must be >= 4 meters")
        if self.points_per_object < 1 or self.d_text < 1:
            raise ConfigurationError("synthetic points_per_object and d_text must be >= 1")
        bait = self.shortcut_bait
        if bait is not None and (bait.trigger_label not in self.labels or bait.answer not in self.labels):
            raise ConfigurationError("shortcut_bait labels must come from the label pool")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "SyntheticSpec":
        defaults = cls.__dataclass_fields__
        bait_data = data.get("shortcut_bait")
        bait = None
        if bait_data is not None:
            if not isinstance(bait_data, dict):
                raise ConfigurationError("'shortcut_bait' section must be a mapping")
            try:
                bait = ShortcutBait(
                    trigger_label=str(bait_data["trigger_label"]).lower(),
                    answer=str(bait_data["answer"]).lower(),
                    rate=_read_float(bait_data, "rate", default=0.9, minimum=0.0),
                )
            except KeyError as exc:
                raise ConfigurationError(
                    "shortcut_bait must define trigger_label and answer"
                ) from exc
        synonyms = data.get("synonyms")
        if synonyms is None:
            synonyms_map = default_synonyms()
        elif isinstance(synonyms, dict):
            synonyms_map = {str(k): tuple(str(v) for v in values) for k, values in synonyms.items()}
        else:
            raise ConfigurationError("'synonyms' must map labels to lists of synonyms")
        return cls(
            n_scenes=_read_int(data, "n_scenes", default=500, minimum=1),
            objects_min=_read_int(data, "objects_min", default=4, minimum=3),
            objects_max=_read_int(data, "objects_max", default=8, minimum=3),
            labels=_read_str_tuple(data, "labels", default=defaults["labels"].default),
            colors=_read_str_tuple(data, "colors", default=defaults["colors"].default),
            synonyms=synonyms_map,
            templates=_read_str_tuple(data, "templates", default=TEMPLATES),
            extent=_read_float(data, "extent", default=8.0, minimum=0.0),
            points_per_object=_read_int(data, "points_per_object", default=16, minimum=1),
            background_points=_read_int(data, "background_points", default=48, minimum=0),
            noise=_read_float(data, "noise", default=0.01, minimum=0.0),
            d_text=_read_int(data, "d_text", default=16, minimum=1),
            seed=_read_int(data, "seed", default=0, minimum=0),
            shortcut_bait=bait,
        )

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["labels"] = list(self.labels)
        data["colors"] = list(self.colors)
        data["templates"] = list(self.templates)
        data["synonyms"] = {key: list(self.synonyms[key]) for key in sorted(self.synonyms)}
        return data


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run depends on."""

    epochs: int = 200
    batch_size: int = 16
    optimizer: str = "adam"
    lr: float = 0.003
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    grad_clip: float | None = 5.0
    seed: int = 0
    weights: LossWeights = LossWeights()
    flags: SupervisionFlags = SupervisionFlags()
    model: ModelConfig = ModelConfig()
    labelgen: LabelGenConfig = LabelGenConfig()
    mask_supervision: MaskSupervision = MaskSupervision.HIERARCHICAL

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ConfigurationError("training.epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigurationError("training.batch_size must be >= 1")
        if self.optimizer not in {"sgd", "adam"}:
            raise ConfigurationError("training.optimizer must be 'sgd' or 'adam'")
        if self.lr < 0:
            raise ConfigurationError("training.lr must be >= 0")

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "TrainConfig":
        training = _section(data, "training")
        grad_clip: float | None = _read_float(training, "grad_clip", default=5.0, minimum=0.0)
        if grad_clip == 0.0:
            grad_clip = None
        return cls(
            epochs=_read_int(training, "epochs", default=200, minimum=1),
            batch_size=_read_int(training, "batch_size", default=16, minimum=1),
            optimizer=_read_choice(training, "optimizer", ("sgd", "adam"), default="adam"),
            lr=_read_float(training, "lr", default=0.003, minimum=0.0),
            beta1=_read_float(training, "beta1", default=0.9, minimum=0.0),
            beta2=_read_float(training, "beta2", default=0.999, minimum=0.0),
            eps=_read_float(training, "eps", default=1e-8, minimum=0.0),
            grad_clip=grad_clip,
            seed=_read_int(training, "seed", default=0, minimum=0),
            weights=LossWeights.from_mapping(_section(data, "loss")),
            flags=SupervisionFlags.from_mapping(_section(data, "supervision")),
            model=ModelConfig.from_mapping(_section(data, "model")),
            labelgen=LabelGenConfig.from_mapping(_section(data, "labelgen")),
            mask_supervision=MaskSupervision(
                _read_choice(training, "mask_supervision", MaskSupervision, default="hierarchical")
            ),
        )

    def to_dict(self) -> dict[str, Any]:
        """Plain mapping in the same layout ``from_mapping`` reads."""
        return {
            "training": {
                "epochs": self.epochs,
                "batch_size": self.batch_size,
                "optimizer": self.optimizer,
                "lr": self.lr,
                "beta1": self.beta1,
                "beta2": self.beta2,
                "eps": self.eps,
                "grad_clip": 0.0 if self.grad_clip is None else self.grad_clip,
                "seed": self.seed,
                "mask_supervision": self.mask_supervision.value,
            },
            "loss": {
                "lambda_cg": self.weights.cg,
                "lambda_fg": self.weights.fg,
                "lambda_if": self.weights.if_,
                "lambda_ans": self.weights.ans,
            },
            "supervision": self.flags.to_mapping(),
            "model": self.model.to_dict(),
            "labelgen": {
                "grid_size": self.labelgen.grid_size,
                "anchor_source": self.labelgen.anchor_source.value,
            },
        }

    def with_seed(self, seed: int | None) -> "TrainConfig":
        return self if seed is None else replace(self, seed=seed)


def _section(data: Mapping[str, Any], name: str) -> Mapping[str, Any]:
    section = data.get(name, {})
    if not isinstance(section, dict):
        raise ConfigurationError(f"'{name}' section must be a mapping")
    return section


def _read_int(
    data: Mapping[str, Any], key: str, *, default: int, minimum: int | None = None
) -> int:
    value = data.get(key, default)
    if isinstance(value, bool):
        raise ConfigurationError(f"Configuration value '{key}' must be an integer")
    try:
        number = int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(
            f"Configuration value '{key}' must be an integer"
        ) from exc
    if number != value and not isinstance(value, str):
        raise ConfigurationError(f"Configuration value '{key}' must be an integer")
    if minimum is not None and number < minimum:
        raise ConfigurationError(f"Configuration value '{key}' must be >= {minimum}")
    return number


def _read_float(
    data: Mapping[str, Any], key: str, *, default: float, minimum: float | None = None
) -> float:
    value = data.get(key, default)
    if isinstance(value, bool):
        raise ConfigurationError(f"Configuration value '{key}' must be a number")
    try:
        number = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"Configuration value '{key}' must be a number") from exc
    if minimum is not None and number < minimum:
        raise ConfigurationError(f"Configuration value '{key}' must be >= {minimum}")
    return number


def _read_bool(data: Mapping[str, Any], key: str, *, default: bool = False) -> bool:
    if key not in data:
        return default
    value = data[key]
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        return bool(value)
    if isinstance(value, str):
        normalized = value.strip().lower()
        if normalized in {"1", "true", "yes", "y", "on"}:
            return True
        if normalized in {"0", "false", "no", "n", "off"}:
            return False
    raise ConfigurationError(
        f"Cannot interpret value '{value!r}' for '{key}' as boolean"
    )


def _read_choice(data: Mapping[str, Any], key: str, choices: Any, *, default: str) -> str:
    allowed = [c.value if isinstance(c, Enum) else c for c in choices]
    value = str(data.get(key, default)).strip().lower()
    if value not in allowed:
        raise ConfigurationError(
            f"Configuration value '{key}' must be one of {', '.join(allowed)}; got '{value}'"
        )
    return value


def _read_str_tuple(data: Mapping[str, Any], key: str, *, default: tuple[str, ...]) -> tuple[str, ...]:
    if key not in data:
        return tuple(default)
    value = data[key]
    if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
        raise ConfigurationError(f"Configuration value '{key}' must be an array of strings")
    return tuple(item.strip().lower() for item in value)


def _merge_dicts(base: dict, overlay: dict) -> dict:
    """Recursively merge overlay dictionary into base dictionary."""
    for key, value in overlay.items():
        if isinstance(value, dict) and key in base and isinstance(base[key], dict):
            _merge_dicts(base[key], value)
        else:
            base[key] = value
    return base


def _read_mapping_file(path: Path) -> dict[str, Any]:
    if path.suffix.lower() == ".json":
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"Invalid JSON in '{path}': {exc}") from exc
    else:
        if tomllib is None:
            raise ConfigurationError("tomllib is not available on this Python version")
        try:
            with path.open("rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"Invalid TOML in '{path}': {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError("Configuration file must define a mapping at top level")
    return data


def load_config_mapping(config_file: Path | None) -> dict[str, Any]:
    """Load a TOML or JSON configuration file as a mapping.

    A sibling ``<stem>.local<suffix>`` file, when present, is merged over
    the main file so machine-specific overrides stay out of version control.
    """
    if config_file is None:
        raise ConfigurationError("No configuration file supplied")
    config_file = Path(config_file)
    if not config_file.exists():
        raise FileNotFoundError(f"Configuration file '{config_file}' does not exist")

    data = _read_mapping_file(config_file)

    local_config_file = config_file.with_name(
        config_file.stem + ".local" + config_file.suffix
    )
    if local_config_file.exists():
        _merge_dicts(data, _read_mapping_file(local_config_file))
    return data


def load_train_config(config_file: Path | None) -> TrainConfig:
    return TrainConfig.from_mapping(load_config_mapping(config_file))


def load_synthetic_spec(config_file: Path | None) -> SyntheticSpec:
    """Read a SyntheticSpec from a file's ``[synthetic]`` section (or top level)."""
    data = load_config_mapping(config_file)
    return SyntheticSpec.from_mapping(data.get("synthetic", data))


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_digest(data: Mapping[str, Any]) -> str:
    """SHA-256 of the canonical JSON form of a configuration mapping."""
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


__all__ = [
    "ConfigurationError",
    "AnchorSource",
    "MaskMode",
    "MaskSupervision",
    "LabelGenConfig",
    "ModelConfig",
    "LossWeights",
    "SupervisionFlags",
    "ANSWER_ONLY",
    "FULL_SUPERVISION",
    "ABLATION_ROWS",
    "ANNOTATION_ROWS",
    "ShortcutBait",
    "SyntheticSpec",
    "TrainConfig",
    "TEMPLATES",
    "default_synonyms",
    "load_config_mapping",
    "load_train_config",
    "load_synthetic_spec",
    "canonical_json",
    "config_digest",
]
