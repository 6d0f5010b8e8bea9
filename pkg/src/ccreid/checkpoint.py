"""Versioned single-file checkpoints with atomic writes."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import torch

from ccreid.errors import ValidationError

FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, kind: str, payload: dict[str, Any]) -> Path:
    """Write {format_version, kind, **payload} to path via temp-then-rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blob = {"format_version": FORMAT_VERSION, "kind": kind}
    blob.update(payload)
    tmp = path.with_name(path.name + ".tmp")
    torch.save(blob, tmp)
    os.replace(tmp, path)
    return path


def load_checkpoint(path: str | Path, kind: str) -> dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"checkpoint not found: {path}")
    blob = torch.load(path, map_location="cpu", weights_only=False)
    if not isinstance(blob, dict) or blob.get("format_version") != FORMAT_VERSION:
        raise ValidationError(f"{path}: not a recognized checkpoint file")
    if blob.get("kind") != kind:
        raise ValidationError(f"{path}: checkpoint kind {blob.get('kind')!r}, expected {kind!r}")
    return blob
