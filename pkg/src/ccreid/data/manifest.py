"""Dataset manifests: one JSON-lines file describing every image.

File format (UTF-8, one JSON object per line):

    {"manifest_version": 1, "name": "toy", "n_cameras": 4}     <- header
    {"path": "images/c00/v0000_i00.png", "vehicle_id": 0,
     "camera_id": 0, "split": "train"}                         <- records

``path`` is stored relative to the manifest's own directory (absolute
paths are kept as-is).  Records are kept sorted by path so that seeded
downstream runs are reproducible regardless of writing order.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ccreid.errors import ManifestError

SPLITS = ("train", "query", "gallery")


@dataclass(frozen=True)
class ImageRecord:
    """One image with its identity label, camera label and split tag."""

    path: str
    vehicle_id: int
    camera_id: int
    split: str

    def resolve(self, root: Path | str) -> Path:
        p = Path(self.path)
        return p if p.is_absolute() else Path(root) / p


@dataclass
class DatasetManifest:
    """An ordered collection of image records plus dataset-level facts."""

    records: list[ImageRecord]
    n_cameras: int
    name: str = "dataset"
    root: Path = field(default_factory=Path)

    @property
    def n_identities(self) -> int:
        return len({r.vehicle_id for r in self.records})

    def split(self, *names: str) -> list[ImageRecord]:
        wanted = set(names)
        return [r for r in self.records if r.split in wanted]

    def cameras_in_split(self, split: str) -> set[int]:
        return {r.camera_id for r in self.records if r.split == split}

    def resolve(self, record: ImageRecord) -> Path:
        return record.resolve(self.root)

    def validate(self) -> None:
        for i, r in enumerate(self.records):
            if not 0 <= r.camera_id < self.n_cameras:
                raise ManifestError(
                    f"record {i} ({r.path!r}): camera_id={r.camera_id} out of "
                    f"range for n_cameras={self.n_cameras}"
                )
            if r.vehicle_id < 0:
                raise ManifestError(f"record {i} ({r.path!r}): negative vehicle_id")
            if r.split not in SPLITS:
                raise ManifestError(f"record {i} ({r.path!r}): unknown split {r.split!r}")


def load_manifest(path: str | Path) -> DatasetManifest:
    """Parse and validate a JSON-lines manifest.

    Raises ManifestError with the offending line number on malformed
    lines, and on records violating the declared camera count.
    """
    path = Path(path)
    if not path.is_file():
        raise ManifestError(f"manifest not found: {path}")
    header: dict | None = None
    records: list[tuple[int, ImageRecord]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: malformed JSON line: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"{path}:{lineno}: expected a JSON object")
            if "manifest_version" in obj:
                if header is not None:
                    raise ManifestError(f"{path}:{lineno}: duplicate header line")
                header = obj
                continue
            try:
                rec = ImageRecord(
                    path=str(obj["path"]),
                    vehicle_id=int(obj["vehicle_id"]),
                    camera_id=int(obj["camera_id"]),
                    split=str(obj["split"]),
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ManifestError(f"{path}:{lineno}: bad record: {exc}") from exc
            if rec.split not in SPLITS:
                raise ManifestError(f"{path}:{lineno}: unknown split {rec.split!r}")
            records.append((lineno, rec))
    if header is None:
        raise ManifestError(f"{path}: missing header line with manifest_version/n_cameras")
    try:
        n_cameras = int(header["n_cameras"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"{path}: header lacks a valid n_cameras field") from exc
    for lineno, rec in records:
        if not 0 <= rec.camera_id < n_cameras:
            raise ManifestError(
                f"{path}:{lineno}: camera_id={rec.camera_id} out of range "
                f"for n_cameras={n_cameras}"
            )
    manifest = DatasetManifest(
        records=sorted((r for _, r in records), key=lambda r: r.path),
        n_cameras=n_cameras,
        name=str(header.get("name", path.stem)),
        root=path.parent,
    )
    manifest.validate()
    return manifest


def save_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    """Write a manifest as JSON-lines (header first, records sorted by path)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(
            json.dumps(
                {"manifest_version": 1, "name": manifest.name, "n_cameras": manifest.n_cameras}
            )
            + "\n"
        )
        for rec in sorted(manifest.records, key=lambda r: r.path):
            fh.write(
                json.dumps(
                    {
                        "path": rec.path,
                        "vehicle_id": rec.vehicle_id,
                        "camera_id": rec.camera_id,
                        "split": rec.split,
                    }
                )
                + "\n"
            )
    os.replace(tmp, path)
    return path
