"""Run manifests: enough provenance to compare reruns byte for byte."""

from __future__ import annotations

import hashlib
import json
import platform
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .config import config_digest

MANIFEST_FILE = "manifest.json"


def file_digest(path: Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(
    command: Sequence[str],
    *,
    seed: int | None,
    config: Mapping[str, Any],
    artifacts: Iterable[Path],
    base_dir: Path,
) -> dict[str, Any]:
    """Manifest mapping; artifact paths are relative to ``base_dir``. No timestamps."""
    base_dir = Path(base_dir)
    files = {}
    for path in artifacts:
        path = Path(path)
        try:
            key = path.relative_to(base_dir).as_posix()
        except ValueError:
            key = path.as_posix()
        files[key] = file_digest(path)
    return {
        "tool": "narrowqa",
        "version": __version__,
        "command": list(command),
        "seed": seed,
        "config_sha256": config_digest(config),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "artifacts": {key: files[key] for key in sorted(files)},
    }


def write_manifest(out_dir: Path, manifest: Mapping[str, Any]) -> Path:
    path = Path(out_dir) / MANIFEST_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


__all__ = ["MANIFEST_FILE", "file_digest", "build_manifest", "write_manifest"]
