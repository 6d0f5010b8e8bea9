"""Retrieval evaluation: per-query average precision, mAP and CMC.

AP uses the non-interpolated form standard in re-identification
evaluation: AP = (1/R) * sum over relevant ranks k of (hits@k / k),
with R the number of relevant gallery items for the query.  The CMC
value at rank k is the fraction of queries whose first relevant item
appears at rank <= k.  Queries with no relevant gallery item (after
protocol filtering) are excluded from the averages and counted in the
report rather than silently dropped.

All arithmetic is plain float64 in deterministic left-to-right order, so
results are bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ccreid.data.protocol import PROTOCOLS
from ccreid.errors import ValidationError
from ccreid.retrieval.ranking import RankingResult, rank
from ccreid.retrieval.store import DescriptorStore

AP_DEFINITION = "non-interpolated: AP = (1/R) * sum_k rel_k * (hits@k / k)"


def average_precision(relevance: list[bool] | np.ndarray) -> float:
    """AP of one ranked relevance list; raises if nothing is relevant."""
    hits = 0
    total = 0.0
    for k, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            total = total + hits / k
    if hits == 0:
        raise ValidationError("average precision undefined without relevant items")
    return total / hits


def cmc_curve(rankings: list[list[bool]] | list[np.ndarray], max_rank: int) -> np.ndarray:
    """Cumulative match characteristic over a set of ranked relevance lists."""
    if max_rank < 1:
        raise ValidationError("max_rank must be at least 1")
    if not rankings:
        raise ValidationError("cmc_curve needs at least one query")
    counts = np.zeros(max_rank, dtype=np.float64)
    for flags in rankings:
        first = next((i for i, rel in enumerate(flags) if rel), None)
        if first is None:
            raise ValidationError("each query needs at least one relevant item")
        if first < max_rank:
            counts[first:] += 1.0
    return counts / len(rankings)


@dataclass
class EvalReport:
    """CMC curve, per-query AP and mAP for one protocol run."""

    map: float
    cmc: list[float]
    per_query_ap: list[float]
    n_queries: int
    n_gallery: int
    n_excluded: int = 0
    protocol: dict = field(default_factory=dict)
    descriptor: str = "all"

    def validate(self) -> None:
        arr = np.asarray(self.cmc)
        if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
            raise ValidationError("cmc values must lie in [0, 1]")
        if np.any(np.diff(arr) < -1e-12):
            raise ValidationError("cmc must be non-decreasing in rank")
        if self.per_query_ap:
            mean = sum(self.per_query_ap) / len(self.per_query_ap)
            if abs(mean - self.map) > 1e-12:
                raise ValidationError("map does not equal the mean per-query AP")

    def to_dict(self) -> dict:
        return {
            "map": self.map,
            "cmc": list(self.cmc),
            "per_query_ap": list(self.per_query_ap),
            "n_queries": self.n_queries,
            "n_gallery": self.n_gallery,
            "n_excluded": self.n_excluded,
            "protocol": self.protocol,
            "descriptor": self.descriptor,
            "ap_definition": AP_DEFINITION,
        }

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        path = Path(path)
        if not path.is_file():
            raise ValidationError(f"report not found: {path}")
        d = json.loads(path.read_text())
        return cls(
            map=d["map"], cmc=d["cmc"], per_query_ap=d["per_query_ap"],
            n_queries=d["n_queries"], n_gallery=d["n_gallery"],
            n_excluded=d.get("n_excluded", 0), protocol=d.get("protocol", {}),
            descriptor=d.get("descriptor", "all"),
        )


def evaluate(
    ranking: RankingResult,
    queries: DescriptorStore,
    gallery: DescriptorStore,
    max_rank: int = 10,
    protocol_echo: dict | None = None,
    descriptor: str = "all",
) -> EvalReport:
    """Score one ranking pass; relevance is same-vehicle-id."""
    if ranking.n_queries != len(queries):
        raise ValidationError("ranking and query store sizes differ")
    if ranking.n_queries == 0:
        raise ValidationError("empty query set")
    g_vids = np.asarray(gallery.vehicle_ids)
    per_ap: list[float] = []
    relevance_lists: list[np.ndarray] = []
    n_excluded = len(ranking.errors)
    for qi in range(ranking.n_queries):
        if qi in ranking.errors:
            continue
        flags = g_vids[ranking.order[qi]] == queries.vehicle_ids[qi]
        if not flags.any():
            n_excluded += 1
            continue
        per_ap.append(average_precision(flags))
        relevance_lists.append(flags)
    if not per_ap:
        raise ValidationError("no query has a relevant gallery item")
    report = EvalReport(
        map=sum(per_ap) / len(per_ap),
        cmc=list(cmc_curve(relevance_lists, max_rank)),
        per_query_ap=per_ap,
        n_queries=len(per_ap),
        n_gallery=len(gallery),
        n_excluded=n_excluded,
        protocol=protocol_echo or {},
        descriptor=descriptor,
    )
    report.validate()
    return report


def evaluate_protocol(
    test_store: DescriptorStore,
    protocol: str,
    filter: str = "cross_camera",
    seed: int = 0,
    trials: int = 10,
    max_rank: int = 10,
    descriptor: str = "all",
) -> EvalReport:
    """Protocol-level evaluation over an extracted test store.

    veri: split-tagged query vs gallery descriptors, one pass.
    vehicleid: ``trials`` seeded one-image-per-identity gallery draws,
    metrics pooled over all trials (per-trial query counts are equal, so
    pooling equals averaging the per-trial means).
    """
    if protocol not in PROTOCOLS:
        raise ValidationError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
    if protocol == "veri":
        q_idx = [i for i, s in enumerate(test_store.splits) if s == "query"]
        g_idx = [i for i, s in enumerate(test_store.splits) if s == "gallery"]
        if not q_idx or not g_idx:
            raise ValidationError("veri protocol needs query and gallery split tags")
        queries, gallery = test_store.subset(q_idx), test_store.subset(g_idx)
        ranking = rank(queries, gallery, filter=filter)
        echo = {"protocol": "veri", "filter": filter, "seed": seed, "trials": 1}
        return evaluate(ranking, queries, gallery, max_rank, echo, descriptor)

    if trials < 1:
        raise ValidationError("vehicleid protocol needs at least one trial")
    by_id: dict[int, list[int]] = {}
    for i, vid in enumerate(test_store.vehicle_ids):
        by_id.setdefault(vid, []).append(i)
    trial_seeds = [seed + t for t in range(trials)]
    per_ap: list[float] = []
    relevance_lists: list[np.ndarray] = []
    n_excluded = 0
    n_gallery = len(by_id)
    for trial_seed in trial_seeds:
        rng = np.random.default_rng(np.random.SeedSequence((trial_seed, 0x6A11E47)))
        g_idx, q_idx = [], []
        for vid in sorted(by_id):
            group = by_id[vid]
            pick = int(rng.integers(len(group)))
            g_idx.append(group[pick])
            q_idx.extend(i for i in group if i != group[pick])
        if not q_idx:
            raise ValidationError("every test identity has a single image; no probes")
        queries, gallery = test_store.subset(q_idx), test_store.subset(g_idx)
        ranking = rank(queries, gallery, filter="none")
        g_vids = np.asarray(gallery.vehicle_ids)
        for qi in range(len(queries)):
            flags = g_vids[ranking.order[qi]] == queries.vehicle_ids[qi]
            if not flags.any():
                n_excluded += 1
                continue
            per_ap.append(average_precision(flags))
            relevance_lists.append(flags)
    if not per_ap:
        raise ValidationError("no query has a relevant gallery item")
    report = EvalReport(
        map=sum(per_ap) / len(per_ap),
        cmc=list(cmc_curve(relevance_lists, max_rank)),
        per_query_ap=per_ap,
        n_queries=len(per_ap),
        n_gallery=n_gallery,
        n_excluded=n_excluded,
        protocol={"protocol": "vehicleid", "filter": "none", "seed": seed,
                  "trials": trials, "trial_seeds": trial_seeds},
        descriptor=descriptor,
    )
    report.validate()
    return report
