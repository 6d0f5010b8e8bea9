import numpy as np
import pytest

from ccreid.errors import ValidationError
from ccreid.metrics import EvalReport, average_precision, cmc_curve, evaluate, evaluate_protocol
from ccreid.retrieval import DescriptorStore, rank

from test_fusion_store_ranking import make_store


# --- independent brute-force oracle -------------------------------------
# Deliberately different implementation style from the library: works on a
# raw distance matrix, sorts with Python tuples, and computes precision
# lists explicitly.

def oracle_rank(dist_row, keep_mask):
    pairs = sorted((d, j) for j, (d, k) in enumerate(zip(dist_row, keep_mask)) if k)
    return [j for _, j in pairs]


def oracle_ap(ordered_flags):
    precisions = []
    hits = 0
    for k, rel in enumerate(ordered_flags, start=1):
        if rel:
            hits += 1
        precisions.append(hits / k)
    total = 0.0
    n_rel = 0
    for k, rel in enumerate(ordered_flags, start=1):
        if rel:
            total = total + precisions[k - 1]
            n_rel += 1
    return total / n_rel


def oracle_eval(dist, q_vids, q_cids, g_vids, g_cids, max_rank, cross_camera):
    aps = []
    cmc_counts = [0] * max_rank
    n_valid = 0
    for qi in range(dist.shape[0]):
        keep = [True] * dist.shape[1]
        if cross_camera:
            keep = [not (gv == q_vids[qi] and gc == q_cids[qi])
                    for gv, gc in zip(g_vids, g_cids)]
        order = oracle_rank(dist[qi], keep)
        flags = [g_vids[j] == q_vids[qi] for j in order]
        if True not in flags:
            continue
        aps.append(oracle_ap(flags))
        first = flags.index(True)
        for r in range(max_rank):
            if first <= r:
                cmc_counts[r] += 1
        n_valid += 1
    m_ap = sum(aps) / len(aps)
    cmc = [c / n_valid for c in cmc_counts]
    return m_ap, cmc, aps


class TestAveragePrecision:
    def test_perfect_retrieval(self):
        assert average_precision([True, True, False, False]) == 1.0

    def test_hand_case_ranks_one_and_three(self):
        got = average_precision([True, False, True, False])
        assert abs(got - (1.0 + 2.0 / 3.0) / 2.0) < 1e-12
        assert abs(got - 0.833333) < 1e-6

    def test_single_relevant_at_rank_four(self):
        assert average_precision([False, False, False, True]) == 0.25

    def test_no_relevant_items_raises(self):
        with pytest.raises(ValidationError):
            average_precision([False, False])


class TestCmcCurve:
    def test_first_match_at_rank_one(self):
        got = cmc_curve([[True, False, False]], max_rank=3)
        np.testing.assert_array_equal(got, [1.0, 1.0, 1.0])

    def test_hand_case_two_queries(self):
        got = cmc_curve([[True, False, False, False],
                         [False, False, True, False]], max_rank=4)
        np.testing.assert_array_equal(got, [0.5, 0.5, 1.0, 1.0])

    def test_match_beyond_max_rank_contributes_zero(self):
        got = cmc_curve([[False, False, False, True]], max_rank=2)
        np.testing.assert_array_equal(got, [0.0, 0.0])

    def test_monotone_and_bounded_on_random_instances(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            n_q = int(rng.integers(1, 30))
            flags = []
            for _ in range(n_q):
                row = rng.uniform(size=20) < 0.2
                row[rng.integers(20)] = True
                flags.append(row)
            got = cmc_curve(flags, max_rank=10)
            assert np.all(np.diff(got) >= 0)
            assert got[0] >= 0 and got[-1] <= 1


class TestEvaluate:
    def test_self_retrieval_is_perfect(self):
        rng = np.random.default_rng(10)
        v = rng.normal(size=(6, 4))
        store = make_store(v, vids=[0, 1, 2, 3, 4, 5])
        res = rank(store, store, filter="none")
        report = evaluate(res, store, store, max_rank=3)
        assert report.map == 1.0
        assert report.cmc[0] == 1.0

    def test_matches_oracle_on_random_instances(self):
        rng = np.random.default_rng(11)
        for trial in range(100):
            nq = int(rng.integers(2, 51))
            ng = int(rng.integers(5, 201))
            dim = int(rng.integers(2, 8))
            n_ids = int(rng.integers(2, 12))
            q = make_store(rng.normal(size=(nq, dim)),
                           vids=rng.integers(0, n_ids, nq), cids=rng.integers(0, 3, nq))
            g = make_store(rng.normal(size=(ng, dim)),
                           vids=rng.integers(0, n_ids, ng), cids=rng.integers(0, 3, ng))
            cross = trial % 2 == 0
            flt = "cross_camera" if cross else "none"
            try:
                report = evaluate(rank(q, g, filter=flt), q, g, max_rank=5)
            except ValidationError:
                continue  # instance where no query had a relevant item
            dist = np.sqrt(((q.vectors.astype(np.float64)[:, None, :]
                             - g.vectors.astype(np.float64)[None, :, :]) ** 2).sum(-1))
            want_map, want_cmc, want_aps = oracle_eval(
                dist, q.vehicle_ids, q.camera_ids, g.vehicle_ids, g.camera_ids,
                5, cross)
            assert report.map == want_map  # bit-for-bit float64
            assert report.per_query_ap == want_aps
            assert report.cmc == want_cmc

    def test_excluded_queries_are_counted(self):
        g = make_store([[0.0], [1.0]], vids=[5, 5], cids=[0, 0])
        q = make_store([[0.0], [0.5]], vids=[5, 9], cids=[1, 1])
        report = evaluate(rank(q, g, filter="cross_camera"), q, g, max_rank=2)
        assert report.n_queries == 1
        assert report.n_excluded == 1

    def test_report_roundtrip(self, tmp_path):
        g = make_store([[0.0], [1.0]], vids=[5, 5])
        q = make_store([[0.2]], vids=[5], cids=[1])
        report = evaluate(rank(q, g), q, g, max_rank=2,
                          protocol_echo={"protocol": "veri", "seed": 3})
        p = report.save(tmp_path / "r.json")
        loaded = EvalReport.load(p)
        assert loaded.map == report.map
        assert loaded.cmc == report.cmc
        assert loaded.protocol == report.protocol


class TestEvaluateProtocol:
    def build_test_store(self, rng, n_ids=6, per_id=3, noise=0.3):
        rows, vids, cids, splits = [], [], [], []
        for vid in range(n_ids):
            center = rng.normal(size=4) * 3
            for j in range(per_id):
                rows.append(center + rng.normal(size=4) * noise)
                vids.append(vid)
                cids.append(j % 3)
                splits.append("query" if j == 0 else "gallery")
        store = make_store(np.array(rows), vids=vids, cids=cids)
        store.splits = splits
        return store

    def test_vehicleid_trials_are_seeded_and_reproducible(self):
        rng = np.random.default_rng(12)
        # overlapping identity clusters: the metric value depends on which
        # image each trial draws into the gallery
        store = self.build_test_store(rng, noise=3.0)
        a = evaluate_protocol(store, "vehicleid", seed=5, trials=4, max_rank=5)
        b = evaluate_protocol(store, "vehicleid", seed=5, trials=4, max_rank=5)
        assert a.map == b.map
        assert a.cmc == b.cmc
        assert a.protocol["trial_seeds"] == [5, 6, 7, 8]
        c = evaluate_protocol(store, "vehicleid", seed=99, trials=4, max_rank=5)
        assert c.map != a.map or c.per_query_ap != a.per_query_ap

    def test_vehicleid_query_count_per_trial(self):
        rng = np.random.default_rng(13)
        store = self.build_test_store(rng, n_ids=4, per_id=3)
        report = evaluate_protocol(store, "vehicleid", seed=1, trials=5, max_rank=3)
        # each trial: 4 ids x (3-1) probes
        assert report.n_queries == 5 * 4 * 2
        assert report.n_gallery == 4

    def test_veri_uses_split_tags(self):
        rng = np.random.default_rng(14)
        store = self.build_test_store(rng)
        report = evaluate_protocol(store, "veri", filter="cross_camera",
                                   seed=0, max_rank=5)
        assert report.protocol["protocol"] == "veri"
        assert 0.0 <= report.map <= 1.0

    def test_map_equals_mean_per_query_ap(self):
        rng = np.random.default_rng(15)
        store = self.build_test_store(rng)
        for protocol in ("veri", "vehicleid"):
            report = evaluate_protocol(store, protocol, seed=2, trials=3, max_rank=5)
            assert abs(report.map - sum(report.per_query_ap) / len(report.per_query_ap)) <= 1e-12
