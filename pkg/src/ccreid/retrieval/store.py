"""Descriptor storage: compact binary vectors plus inspectable metadata.

Layout for a store saved at ``x.desc``:

* ``x.desc``            binary: header ``<4sIQI`` (magic b"CCRD", version,
                        count, dim) followed by count*dim float32 values,
                        row-major.
* ``x.desc.meta.jsonl`` one JSON object per row:
                        {vehicle_id, camera_id, path, split}.
* ``x.desc.info.json``  manifest reference and extraction config echo.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ccreid.errors import ValidationError

MAGIC = b"CCRD"
VERSION = 1
_HEADER = struct.Struct("<4sIQI")


@dataclass
class DescriptorStore:
    """Ordered fused descriptors with per-row identity/camera metadata."""

    vectors: np.ndarray                 # (n, dim) float32
    vehicle_ids: list[int]
    camera_ids: list[int]
    paths: list[str]
    splits: list[str] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        n = self.vectors.shape[0]
        if not self.splits:
            self.splits = [""] * n
        lengths = {n, len(self.vehicle_ids), len(self.camera_ids),
                   len(self.paths), len(self.splits)}
        if len(lengths) != 1:
            raise ValidationError("descriptor store columns have mismatched lengths")
        if not np.all(np.isfinite(self.vectors)):
            raise ValidationError("descriptors contain non-finite entries")

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def subset(self, indices) -> "DescriptorStore":
        idx = list(indices)
        return DescriptorStore(
            vectors=self.vectors[idx],
            vehicle_ids=[self.vehicle_ids[i] for i in idx],
            camera_ids=[self.camera_ids[i] for i in idx],
            paths=[self.paths[i] for i in idx],
            splits=[self.splits[i] for i in idx],
            info=dict(self.info),
        )

    def segment(self, index: int, n_segments: int = 3) -> "DescriptorStore":
        """Slice out one fused segment (0=global, 1=upper, 2=lower).

        The slice keeps its fusion scaling; rankings under Euclidean
        distance are invariant to that positive common factor.
        """
        if self.dim % n_segments:
            raise ValidationError(f"dim {self.dim} not divisible into {n_segments} segments")
        d = self.dim // n_segments
        out = self.subset(range(len(self)))
        out.vectors = np.ascontiguousarray(self.vectors[:, index * d:(index + 1) * d])
        return out

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        n, dim = self.vectors.shape
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, n, dim))
            fh.write(self.vectors.tobytes(order="C"))
        with open(f"{path}.meta.jsonl", "w", encoding="utf-8") as fh:
            for vid, cid, p, s in zip(self.vehicle_ids, self.camera_ids,
                                      self.paths, self.splits):
                fh.write(json.dumps(
                    {"vehicle_id": vid, "camera_id": cid, "path": p, "split": s}) + "\n")
        with open(f"{path}.info.json", "w", encoding="utf-8") as fh:
            json.dump(self.info, fh, indent=2, sort_keys=True)
        return path

    @classmethod
    def load(cls, path: str | Path) -> "DescriptorStore":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"descriptor file not found: {path}")
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) != _HEADER.size:
                raise ValidationError(f"{path}: truncated header")
            magic, version, n, dim = _HEADER.unpack(head)
            if magic != MAGIC:
                raise ValidationError(f"{path}: bad magic {magic!r}")
            if version != VERSION:
                raise ValidationError(f"{path}: unsupported version {version}")
            data = np.frombuffer(fh.read(), dtype=np.float32)
        if data.size != n * dim:
            raise ValidationError(f"{path}: payload size does not match header")
        vids, cids, paths, splits = [], [], [], []
        with open(f"{path}.meta.jsonl", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                vids.append(int(obj["vehicle_id"]))
                cids.append(int(obj["camera_id"]))
                paths.append(str(obj["path"]))
                splits.append(str(obj.get("split", "")))
        info_path = Path(f"{path}.info.json")
        info = json.loads(info_path.read_text()) if info_path.is_file() else {}
        return cls(vectors=data.reshape(n, dim).copy(), vehicle_ids=vids,
                   camera_ids=cids, paths=paths, splits=splits, info=info)
