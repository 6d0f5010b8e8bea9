"""Batch feature extraction over manifest records."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from ccreid.data.manifest import DatasetManifest, ImageRecord
from ccreid.errors import ValidationError
from ccreid.imageio import load_image
from ccreid.reidnet.training import ReidModel
from ccreid.retrieval.fusion import fuse
from ccreid.retrieval.store import DescriptorStore

log = logging.getLogger(__name__)


@dataclass
class ExtractConfig:
    alpha: float = 0.5
    normalize_segments: bool = True  # per-branch L2 normalization before fusion
    batch_size: int = 32

    def to_dict(self) -> dict:
        return asdict(self)


def extract(
    model: ReidModel,
    manifest: DatasetManifest,
    records: list[ImageRecord] | None = None,
    config: ExtractConfig | None = None,
) -> tuple[DescriptorStore, list[str]]:
    """One fused descriptor per record, in eval mode.

    Returns (store, errors); unreadable images are collected as
    per-record error strings and skipped while the run continues.
    """
    config = config or ExtractConfig()
    if records is None:
        records = list(manifest.records)
    if not 0.0 <= config.alpha <= 1.0:
        raise ValidationError(f"alpha must lie in [0, 1], got {config.alpha}")
    net = model.net
    net.eval()

    kept: list[ImageRecord] = []
    images: list[torch.Tensor] = []
    errors: list[str] = []
    for rec in records:
        try:
            images.append(load_image(manifest.resolve(rec)))
            kept.append(rec)
        except OSError as exc:
            errors.append(f"{rec.path}: {exc}")
            log.warning("extract: skipping unreadable image %s (%s)", rec.path, exc)

    chunks = []
    with torch.no_grad():
        for start in range(0, len(kept), config.batch_size):
            batch = torch.stack(images[start:start + config.batch_size])
            f_g, f_u, f_l = net.features(batch)
            segs = [f.numpy().astype(np.float64) for f in (f_g, f_u, f_l)]
            if config.normalize_segments:
                segs = [s / np.maximum(np.linalg.norm(s, axis=1, keepdims=True), 1e-12)
                        for s in segs]
            chunks.append(fuse(segs[0], segs[1], segs[2], config.alpha))
    vectors = (np.concatenate(chunks, axis=0) if chunks
               else np.zeros((0, 3 * model.config.embedding_dim)))
    store = DescriptorStore(
        vectors=vectors.astype(np.float32),
        vehicle_ids=[r.vehicle_id for r in kept],
        camera_ids=[r.camera_id for r in kept],
        paths=[r.path for r in kept],
        splits=[r.split for r in kept],
        info={
            "manifest": str(Path(manifest.root) / "manifest.jsonl"),
            "manifest_name": manifest.name,
            "config": config.to_dict(),
            "embedding_dim": model.config.embedding_dim,
        },
    )
    return store, errors
