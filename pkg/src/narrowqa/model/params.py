"""Parameter layout and initialisation for the supervised model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import ModelConfig

PHASES = ("cg", "fg", "if")

Params = dict[str, np.ndarray]


@dataclass(frozen=True)
class LinearSpec:
    """A dense layer ``rows x fan_in -> rows x fan_out``."""

    name: str
    fan_in: int
    fan_out: int
    bias: bool = True


def phase_input_width(cfg: ModelConfig, phase: str) -> int:
    # cg reads F_base; fg and if read F_base concatenated with the previous phase.
    return cfg.d_base if phase == "cg" else cfg.d_base + cfg.d_phase


def extractor_layers(cfg: ModelConfig) -> list[LinearSpec]:
    widths = [cfg.d_obj] + [cfg.d_base] * cfg.extractor_depth
    return [
        LinearSpec(f"extractor.{k}", widths[k], widths[k + 1])
        for k in range(cfg.extractor_depth)
    ]


def phase_layers(cfg: ModelConfig, phase: str) -> list[LinearSpec]:
    widths = [phase_input_width(cfg, phase)] + [cfg.d_phase] * cfg.phase_depth
    layers = [
        LinearSpec(f"hsm.{phase}.{k}", widths[k], widths[k + 1]) for k in range(cfg.phase_depth)
    ]
    layers.append(LinearSpec(f"mask.{phase}", cfg.d_phase, 1))
    return layers


def answer_layers(cfg: ModelConfig) -> list[LinearSpec]:
    return [
        LinearSpec("answer.query", cfg.d_text, cfg.d_obj, bias=False),
        LinearSpec("answer.hidden", 2 * cfg.d_obj + cfg.d_text, cfg.d_hidden),
        LinearSpec("answer.out", cfg.d_hidden, cfg.answer_vocab_size),
    ]


def all_layers(cfg: ModelConfig) -> list[LinearSpec]:
    layers = extractor_layers(cfg)
    for phase in PHASES:
        layers.extend(phase_layers(cfg, phase))
    layers.extend(answer_layers(cfg))
    return layers


def init_params(cfg: ModelConfig, seed: int) -> Params:
    """Scaled-normal weights and zero biases, in a fixed name order."""
    if not cfg.is_resolved:
        raise ValueError("model config still has unresolved data widths (d_obj, d_text, V)")
    rng = np.random.default_rng(seed)
    params: Params = {}
    for layer in all_layers(cfg):
        params[f"{layer.name}.w"] = rng.normal(0.0, 1.0 / np.sqrt(layer.fan_in), (layer.fan_in, layer.fan_out))
        if layer.bias:
            params[f"{layer.name}.b"] = np.zeros(layer.fan_out)
    return params


def check_params(cfg: ModelConfig, params: Params) -> None:
    """Raise ValueError when ``params`` does not match the layout of ``cfg``."""
    expected: dict[str, tuple[int, ...]] = {}
    for layer in all_layers(cfg):
        expected[f"{layer.name}.w"] = (layer.fan_in, layer.fan_out)
        if layer.bias:
            expected[f"{layer.name}.b"] = (layer.fan_out,)
    missing = sorted(set(expected) - set(params))
    extra = sorted(set(params) - set(expected))
    if missing or extra:
        raise ValueError(f"parameter names differ: missing {missing}, unexpected {extra}")
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise ValueError(f"parameter '{name}' has shape {params[name].shape}, expected {shape}")


def count_parameters(params: Params) -> int:
    return int(sum(value.size for value in params.values()))


__all__ = [
    "PHASES",
    "Params",
    "LinearSpec",
    "phase_input_width",
    "extractor_layers",
    "phase_layers",
    "answer_layers",
    "all_layers",
    "init_params",
    "check_params",
    "count_parameters",
]
