"""Query-to-gallery ranking by Euclidean distance.

The optional cross-camera filter removes gallery items that share BOTH
the vehicle id and the camera id with the query before ranking (the
standard protocol when queries are drawn from the gallery pool).  Ties
break by gallery index, so rankings are stable and reruns identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from ccreid.errors import ValidationError
from ccreid.retrieval.store import DescriptorStore

FILTERS = ("none", "cross_camera")


@dataclass
class RankingResult:
    """Per-query orderings of (filtered) gallery indices by ascending distance."""

    order: list[np.ndarray]       # gallery indices, best first
    distances: list[np.ndarray]   # distances in ranked order
    errors: dict[int, str] = field(default_factory=dict)

    @property
    def n_queries(self) -> int:
        return len(self.order)


def rank(queries: DescriptorStore, gallery: DescriptorStore,
         filter: str = "none") -> RankingResult:
    """Rank every query against the gallery.

    A query whose filtered gallery is empty gets an error entry instead
    of a ranking.
    """
    if filter not in FILTERS:
        raise ValidationError(f"unknown filter {filter!r}; expected one of {FILTERS}")
    if len(queries) == 0:
        raise ValidationError("query store is empty")
    if queries.dim != gallery.dim:
        raise ValidationError(
            f"descriptor length mismatch: query {queries.dim} vs gallery {gallery.dim}"
        )
    dist = cdist(queries.vectors.astype(np.float64),
                 gallery.vectors.astype(np.float64), metric="euclidean")
    g_vids = np.asarray(gallery.vehicle_ids)
    g_cids = np.asarray(gallery.camera_ids)

    order: list[np.ndarray] = []
    distances: list[np.ndarray] = []
    errors: dict[int, str] = {}
    for qi in range(len(queries)):
        keep = np.ones(len(gallery), dtype=bool)
        if filter == "cross_camera":
            keep = ~((g_vids == queries.vehicle_ids[qi])
                     & (g_cids == queries.camera_ids[qi]))
        kept_idx = np.flatnonzero(keep)
        if kept_idx.size == 0:
            errors[qi] = "gallery empty after filtering"
            order.append(np.empty(0, dtype=np.int64))
            distances.append(np.empty(0))
            continue
        d = dist[qi, kept_idx]
        perm = np.argsort(d, kind="stable")  # stable: ties keep gallery order
        order.append(kept_idx[perm])
        distances.append(d[perm])
    return RankingResult(order=order, distances=distances, errors=errors)
