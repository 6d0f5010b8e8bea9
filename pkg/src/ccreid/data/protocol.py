"""Query/gallery protocol construction.

Two protocols are supported:

* ``veri``: the manifest's query and gallery splits are used as-is
  (a fixed query set against the full gallery).  Cross-camera filtering
  of same-identity same-camera matches happens at evaluation time.
* ``vehicleid``: one image per test identity is drawn (seeded) as the
  gallery and every remaining test image is a probe.  Test identities
  with a single image become gallery-only.
"""

from __future__ import annotations

import numpy as np

from ccreid.data.manifest import DatasetManifest, ImageRecord
from ccreid.errors import ValidationError

PROTOCOLS = ("veri", "vehicleid")


def build_protocol(
    manifest: DatasetManifest, protocol: str, seed: int = 0
) -> tuple[list[ImageRecord], list[ImageRecord]]:
    """Return (query, gallery) record lists for the requested protocol."""
    if protocol not in PROTOCOLS:
        raise ValidationError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
    if protocol == "veri":
        query = manifest.split("query")
        gallery = manifest.split("gallery")
        if not query or not gallery:
            raise ValidationError("veri protocol needs non-empty query and gallery splits")
        return query, gallery
    return _vehicleid_draw(manifest.split("query", "gallery"), seed)


def _vehicleid_draw(
    test_records: list[ImageRecord], seed: int
) -> tuple[list[ImageRecord], list[ImageRecord]]:
    if not test_records:
        raise ValidationError("vehicleid protocol needs a non-empty test split")
    by_id: dict[int, list[ImageRecord]] = {}
    for rec in test_records:  # records arrive in manifest (path-sorted) order
        by_id.setdefault(rec.vehicle_id, []).append(rec)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0x6A11E47)))
    gallery: list[ImageRecord] = []
    query: list[ImageRecord] = []
    for vid in sorted(by_id):
        group = by_id[vid]
        pick = int(rng.integers(len(group)))
        gallery.append(group[pick])
        query.extend(r for i, r in enumerate(group) if i != pick)
    return query, gallery
