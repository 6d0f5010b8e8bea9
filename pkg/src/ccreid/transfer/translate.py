"""Map a dataset's training images into one common camera domain.

Every train record is replaced by its translation into the target camera
(images already in the target camera are translated too by default, so
the whole training set goes through the same distribution).  Query and
gallery records are carried over untouched, pointing at the original
files.  Identity labels and the record count are preserved.
"""

from __future__ import annotations

import os
import shutil
from dataclasses import dataclass
from pathlib import Path

import torch

from ccreid.data.manifest import DatasetManifest, ImageRecord, save_manifest
from ccreid.errors import ValidationError
from ccreid.imageio import load_batch, save_image
from ccreid.transfer.networks import camera_code
from ccreid.transfer.training import TransferModel


@dataclass
class TransferStats:
    """Per-record bookkeeping of one translation run."""

    n_translated: int
    n_passthrough: int
    manifest_path: Path


@dataclass
class TranslateConfig:
    batch_size: int = 32
    passthrough: bool = False  # copy train images unchanged (no generator)


def most_populated_camera(manifest: DatasetManifest) -> int:
    """Default common domain: the camera with the most training images."""
    counts: dict[int, int] = {}
    for r in manifest.split("train"):
        counts[r.camera_id] = counts.get(r.camera_id, 0) + 1
    if not counts:
        raise ValidationError("manifest has no train records")
    return max(sorted(counts), key=lambda c: counts[c])


def translate_dataset(
    checkpoint: str | Path | None,
    manifest: DatasetManifest,
    target_camera: int,
    out_dir: str | Path,
    config: TranslateConfig | None = None,
) -> DatasetManifest:
    """Write translated train images plus a new manifest under out_dir.

    Inference is deterministic given (checkpoint, input).  Returns the
    new manifest (saved as out_dir/manifest.jsonl).
    """
    config = config or TranslateConfig()
    if not 0 <= target_camera < manifest.n_cameras:
        raise ValidationError(
            f"target camera {target_camera} out of range [0, {manifest.n_cameras})"
        )
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    model = None
    if not config.passthrough:
        if checkpoint is None:
            raise ValidationError("translation needs a checkpoint (or passthrough mode)")
        model = TransferModel.load(checkpoint)
        model.generator.eval()

    train = manifest.split("train")
    records: list[ImageRecord] = []
    n_translated = n_passthrough = 0
    for start in range(0, len(train), config.batch_size):
        chunk = train[start:start + config.batch_size]
        # source camera kept in the name: basenames repeat across cameras
        out_paths = [f"images/s{r.camera_id:02d}_{Path(r.path).name}" for r in chunk]
        if config.passthrough:
            for rec, rel in zip(chunk, out_paths):
                shutil.copyfile(manifest.resolve(rec), out_dir / rel)
            n_passthrough += len(chunk)
        else:
            x = load_batch([manifest.resolve(r) for r in chunk])
            code = camera_code(target_camera, manifest.n_cameras, batch=len(chunk))
            with torch.no_grad():
                fake = model.generator(x, code)
            for img, rel in zip(fake, out_paths):
                save_image(img, out_dir / rel)
            n_translated += len(chunk)
        records.extend(
            ImageRecord(path=rel, vehicle_id=r.vehicle_id,
                        camera_id=target_camera, split="train")
            for r, rel in zip(chunk, out_paths)
        )

    # evaluation records keep their original files and camera labels
    for r in manifest.split("query", "gallery"):
        src = manifest.resolve(r).resolve()
        rel = os.path.relpath(src, out_dir.resolve())
        records.append(ImageRecord(path=rel, vehicle_id=r.vehicle_id,
                                   camera_id=r.camera_id, split=r.split))

    if len(records) != len(manifest.records):
        raise RuntimeError("translation changed the record count")
    new_manifest = DatasetManifest(
        records=sorted(records, key=lambda r: r.path),
        n_cameras=manifest.n_cameras,
        name=f"{manifest.name}-common-c{target_camera}",
        root=out_dir,
    )
    new_manifest.validate()
    save_manifest(new_manifest, out_dir / "manifest.jsonl")
    return new_manifest
