"""Versioned JSON parameter checkpoints."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

CHECKPOINT_FORMAT = "narrowqa-checkpoint"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Raised when a checkpoint file is malformed or of an unknown version."""


def dump_checkpoint(params: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None) -> str:
    """Serialise parameters as JSON; float64 values round-trip exactly."""
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "meta": dict(meta or {}),
        "params": {
            name: {
                "shape": list(np.shape(value)),
                "values": np.asarray(value, dtype=np.float64).reshape(-1).tolist(),
            }
            for name, value in params.items()
        },
    }
    return json.dumps(payload, separators=(",", ":")) + "\n"


def save_checkpoint(
    path: Path, params: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_checkpoint(params, meta), encoding="utf-8")


def load_checkpoint(path: Path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Return ``(params, meta)`` from a checkpoint file."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: not valid JSON ({exc.msg})") from exc
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {payload.get('version')!r}"
        )
    params: dict[str, np.ndarray] = {}
    for name, entry in payload.get("params", {}).items():
        try:
            shape = tuple(int(d) for d in entry["shape"])
            values = np.asarray(entry["values"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"{path}: parameter '{name}' is malformed") from exc
        if values.size != int(np.prod(shape, dtype=np.int64)):
            raise CheckpointError(
                f"{path}: parameter '{name}' has {values.size} values for shape {shape}"
            )
        params[name] = values.reshape(shape)
    meta = payload.get("meta", {})
    if not isinstance(meta, dict):
        raise CheckpointError(f"{path}: 'meta' must be an object")
    return params, meta


__all__ = [
    "CHECKPOINT_FORMAT",
    "CHECKPOINT_VERSION",
    "CheckpointError",
    "dump_checkpoint",
    "save_checkpoint",
    "load_checkpoint",
]
