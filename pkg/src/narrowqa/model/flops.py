"""Forward-pass FLOP accounting.

A dense layer costs 2 x fan_in x fan_out x rows; mean pooling costs one
FLOP per pooled entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..config import ModelConfig
from .params import PHASES, answer_layers, extractor_layers, phase_layers


def linear_flops(fan_in: int, fan_out: int, rows: int) -> int:
    return 2 * fan_in * fan_out * rows


@dataclass(frozen=True)
class FlopsReport:
    """FLOP counts per component of one forward pass.

    Attributes:
        layers: Count per dense layer or attention product, in forward order
        hsm_total: The three phase MLPs and their mask heads
        model_total: Everything in ``layers``
        backbone_flops: Reference budget the HSM cost is compared against
    """

    layers: dict[str, int] = field(default_factory=dict)
    hsm_total: int = 0
    model_total: int = 0
    backbone_flops: float = math.inf

    @property
    def ratio(self) -> float:
        """HSM FLOPs over the backbone budget (0 for an unbounded budget)."""
        if math.isinf(self.backbone_flops):
            return 0.0
        if self.backbone_flops <= 0:
            raise ValueError("backbone_flops must be positive")
        return self.hsm_total / self.backbone_flops

    @property
    def hsm_share(self) -> float:
        return self.hsm_total / self.model_total if self.model_total else 0.0

    def to_dict(self) -> dict[str, object]:
        return {
            "layers": dict(self.layers),
            "hsm_total": self.hsm_total,
            "model_total": self.model_total,
            "backbone_flops": None if math.isinf(self.backbone_flops) else self.backbone_flops,
            "hsm_over_backbone": self.ratio,
            "hsm_share_of_model": self.hsm_share,
        }


def count_flops(
    cfg: ModelConfig, n_objects: int, t_text: int, backbone_flops: float = math.inf
) -> FlopsReport:
    if n_objects < 1 or t_text < 1:
        raise ValueError("n_objects and t_text must be >= 1")
    layers: dict[str, int] = {}
    for layer in extractor_layers(cfg):
        layers[layer.name] = linear_flops(layer.fan_in, layer.fan_out, n_objects)
    hsm_total = 0
    for phase in PHASES:
        for layer in phase_layers(cfg, phase):
            flops = linear_flops(layer.fan_in, layer.fan_out, n_objects)
            layers[layer.name] = flops
            hsm_total += flops
    query, hidden, out = answer_layers(cfg)
    layers["answer.pool_text"] = t_text * cfg.d_text
    layers[query.name] = linear_flops(query.fan_in, query.fan_out, 1)
    layers["answer.scores"] = linear_flops(cfg.d_obj, n_objects, 1)
    layers["answer.attend"] = linear_flops(n_objects, cfg.d_obj, 1)
    layers["answer.pool_tokens"] = n_objects * cfg.d_obj
    layers[hidden.name] = linear_flops(hidden.fan_in, hidden.fan_out, 1)
    layers[out.name] = linear_flops(out.fan_in, out.fan_out, 1)
    return FlopsReport(
        layers=layers,
        hsm_total=hsm_total,
        model_total=sum(layers.values()),
        backbone_flops=float(backbone_flops),
    )


__all__ = ["linear_flops", "FlopsReport", "count_flops"]
