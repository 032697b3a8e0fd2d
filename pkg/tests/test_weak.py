from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from decswitch.code_model import sample_batch
from decswitch.weak import (
    DB_PER_NEPER,
    ClusterSet,
    PathTable,
    cluster_gap,
    complementary_gap,
    complementary_matching,
    mwpm_decode,
    path_table,
    to_db,
    uf_decode,
)

from .conftest import bits, code
from .oracles import GraphOracle, pairing_weight


def empty_gap_db(d: int, p: float) -> float:
    return DB_PER_NEPER * d * math.log((1 - p) / p)


def random_defects(rng, graph, max_k=8):
    k = int(rng.integers(0, max_k + 1))
    return np.sort(rng.choice(graph.num_detectors, size=min(k, graph.num_detectors), replace=False))


def correction_syndrome(graph, edges) -> np.ndarray:
    det = np.zeros(graph.num_nodes, dtype=np.uint8)
    np.bitwise_xor.at(det, graph.edge_u[edges], 1)
    np.bitwise_xor.at(det, graph.edge_v[edges], 1)
    return det[: graph.num_detectors]


def correction_flip(graph, edges) -> int:
    return int(sum(graph.edges[e].observable for e in edges) % 2)


class TestMWPM:
    def test_empty(self):
        g = code(3, 0.1).graphs["X"]
        m = mwpm_decode(g, bits(g, []))
        assert m.pairs == [] and m.weight == 0.0 and m.flip == 0
        assert len(m.edges) == 0

    def test_single_defect_next_to_boundary(self):
        g = code(5, 0.05).graphs["X"]
        e = next(e for e in g.edges if e.v == g.boundary0)
        m = mwpm_decode(g, bits(g, [e.u]))
        assert m.pairs == [(e.u, g.boundary0)]
        assert m.weight == pytest.approx(e.weight, rel=1e-12)
        assert m.flip == 1

    def test_matches_pairing_enumeration(self, rng):
        # Six defects: plain recursion over every boundary-augmented pairing.
        for _ in range(30):
            g = code(3, 0.05).graphs["X"]
            o = GraphOracle(g)
            dets = np.sort(rng.choice(g.num_detectors, size=6, replace=False))
            ref = pairing_weight(o.dist[np.ix_(dets, dets)], np.minimum(o.b0[dets], o.b1[dets]))
            assert mwpm_decode(g, bits(g, dets)).weight == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("d,r,basis", [(3, 1, "X"), (3, 3, "Z"), (5, 2, "X"), (5, 5, "Z")])
    def test_matches_subset_oracle(self, rng, d, r, basis):
        g = code(d, 0.05, rounds=r).graphs[basis]
        o = GraphOracle(g)
        for _ in range(40):
            dets = random_defects(rng, g)
            m = mwpm_decode(g, bits(g, dets))
            w0, w1 = o.class_weights(dets)
            assert m.weight == pytest.approx(min(w0, w1), rel=1e-9, abs=1e-12)
            assert (w0, w1)[m.flip] == pytest.approx(min(w0, w1), rel=1e-9, abs=1e-12)

    def test_matching_structure(self, rng):
        g = code(5, 0.05).graphs["X"]
        table = path_table(g)
        for _ in range(40):
            dets = random_defects(rng, g)
            m = mwpm_decode(g, bits(g, dets))
            touched = [a for a, b in m.pairs] + [b for a, b in m.pairs if b < g.num_detectors]
            assert sorted(touched) == sorted(dets.tolist())
            assert m.weight == pytest.approx(sum(table.distance(a, b) for a, b in m.pairs), rel=1e-12, abs=1e-12)
            assert np.array_equal(correction_syndrome(g, m.edges), bits(g, dets))
            assert correction_flip(g, m.edges) == m.flip
            assert g.weights[m.edges].sum() <= m.weight + 1e-9

    def test_deterministic(self, rng):
        g = code(5, 0.03).graphs["Z"]
        dets = random_defects(rng, g)
        a, b = mwpm_decode(g, bits(g, dets)), mwpm_decode(g, bits(g, dets))
        assert a.pairs == b.pairs and a.weight == b.weight

    def test_rejects_wrong_shape(self):
        g = code(3, 0.05).graphs["X"]
        with pytest.raises(ValueError):
            mwpm_decode(g, np.zeros(g.num_detectors + 1, dtype=np.uint8))

    def test_path_table_sources(self):
        g = code(3, 0.05).graphs["X"]
        full = path_table(g)
        part = PathTable(g, [0, g.boundary0])
        assert part.distance(0, 5) == full.distance(0, 5)
        assert part.logical == full.logical


class TestComplementaryGap:
    @pytest.mark.parametrize("d,p", [(3, 0.1), (5, 0.01), (7, 0.2)])
    def test_empty_syndrome(self, d, p):
        g = code(d, 0.05, rounds=2).graphs["X"].with_uniform_probability(p)
        gap = complementary_gap(g, bits(g, []))
        assert gap.w_min == 0.0
        assert gap.w_comp == pytest.approx(d * math.log((1 - p) / p), rel=1e-12)
        assert gap.gap == pytest.approx(empty_gap_db(d, p), abs=1e-9)

    def test_empty_d3_value(self):
        g = code(3, 0.1).graphs["X"].with_uniform_probability(0.1)
        assert complementary_gap(g, bits(g, [])).gap == pytest.approx(28.627275, abs=1e-6)

    def test_degenerate_classes(self):
        # Search for a syndrome whose two classes tie in the oracle.
        g = code(3, 0.1, rounds=2).graphs["X"].with_uniform_probability(0.1)
        o = GraphOracle(g)
        found = 0
        for k in (1, 2, 3):
            for dets in itertools.combinations(range(g.num_detectors), k):
                w0, w1 = o.class_weights(dets)
                if abs(w0 - w1) < 1e-12:
                    assert complementary_gap(g, bits(g, dets)).gap == pytest.approx(0.0, abs=1e-9)
                    found += 1
        assert found > 0

    @pytest.mark.parametrize("d,r", [(3, 3), (5, 1), (5, 4)])
    def test_matches_class_oracle(self, rng, d, r):
        g = code(d, 0.05, rounds=r).graphs["X"]
        o = GraphOracle(g)
        for _ in range(40):
            dets = random_defects(rng, g)
            base = mwpm_decode(g, bits(g, dets))
            gap = complementary_gap(g, bits(g, dets), base)
            w = o.class_weights(dets)
            assert gap.w_comp == pytest.approx(w[1 - base.flip], rel=1e-9, abs=1e-12)
            assert gap.w_comp >= gap.w_min - 1e-12
            assert gap.gap == pytest.approx(to_db(abs(w[1] - w[0])), rel=1e-9, abs=1e-9)

    def test_complementary_correction_is_consistent(self, rng):
        g = code(5, 0.05).graphs["X"]
        for _ in range(30):
            dets = random_defects(rng, g)
            for flip in (0, 1):
                m = complementary_matching(g, bits(g, dets), flip)
                assert np.array_equal(correction_syndrome(g, m.edges), bits(g, dets))
                assert correction_flip(g, m.edges) == flip
                assert g.weights[m.edges].sum() <= m.weight + 1e-9

    def test_signed_gap(self):
        m = code(3, 0.05)
        g = m.graphs["X"]
        _, parts, flips = sample_batch(m, 3, 0, 200)
        for k in range(200):
            base = mwpm_decode(g, parts["X"][k])
            res = complementary_gap(g, parts["X"][k], base, truth=int(flips["X"][k]))
            assert abs(res.signed) == res.gap
            if res.gap > 0:
                assert (res.signed > 0) == (base.flip == flips["X"][k])
        assert complementary_gap(g, parts["X"][0]).signed is None


class TestUnionFind:
    def test_empty(self):
        g = code(3, 0.05).graphs["X"]
        m, clusters = uf_decode(g, bits(g, []))
        assert m.pairs == [] and len(m.edges) == 0 and m.flip == 0
        assert len(clusters) == 0

    def test_adjacent_pair(self):
        g = code(5, 0.05).graphs["X"]
        e = next(e for e in g.edges if e.u < g.num_detectors and e.v < g.num_detectors)
        m, clusters = uf_decode(g, bits(g, [e.u, e.v]))
        assert len(clusters) == 1
        nodes = next(iter(clusters.clusters.values()))
        assert nodes.tolist() == sorted([e.u, e.v])
        assert sorted(m.pairs[0]) == sorted([e.u, e.v])
        assert m.flip == mwpm_decode(g, bits(g, [e.u, e.v])).flip

    def test_next_to_boundary(self):
        g = code(5, 0.05).graphs["X"]
        e = next(e for e in g.edges if e.v == g.boundary1)
        m, clusters = uf_decode(g, bits(g, [e.u]))
        nodes = next(iter(clusters.clusters.values()))
        assert g.boundary1 in nodes.tolist() or g.boundary0 in nodes.tolist()
        assert m.pairs == [(e.u, g.boundary1)]
        assert m.flip == 0

    @pytest.mark.parametrize("d,p", [(3, 0.05), (5, 0.03), (5, 0.08)])
    def test_valid_clusters_and_correction(self, d, p):
        m = code(d, p)
        g = m.graphs["X"]
        _, parts, _ = sample_batch(m, 11, 0, 300)
        for k in range(300):
            corr, clusters = uf_decode(g, parts["X"][k])
            assert clusters.is_valid()
            assert np.array_equal(correction_syndrome(g, corr.edges), parts["X"][k])
            assert correction_flip(g, corr.edges) == corr.flip
            assert corr.weight == pytest.approx(g.weights[corr.edges].sum(), rel=1e-12)
            # Corrections only use fully grown edges.
            assert np.all(clusters.full[corr.edges])


class TestClusterGap:
    @pytest.mark.parametrize("mode", ["certified", "residual", "quotient"])
    def test_empty_syndrome(self, mode):
        g = code(3, 0.1).graphs["X"].with_uniform_probability(0.1)
        _, clusters = uf_decode(g, bits(g, []))
        assert cluster_gap(g, clusters, mode).gap == pytest.approx(28.627275, abs=1e-6)

    def test_spanning_cluster(self):
        g = code(3, 0.1, rounds=1).graphs["X"]
        table = path_table(g)
        path = table.path_edges(g.boundary0, g.boundary1)
        root = np.full(g.num_nodes, -1, dtype=np.int64)
        for e in path:
            root[g.edge_u[e]] = 0
            root[g.edge_v[e]] = 0
        clusters = ClusterSet(root, np.zeros(len(g.edges)), np.zeros(len(g.edges), dtype=bool),
                              np.zeros(0, dtype=np.int64), g.num_detectors)
        for mode in ("certified", "residual", "quotient"):
            assert cluster_gap(g, clusters, mode).gap == 0.0

    def test_unknown_mode(self):
        g = code(3, 0.1).graphs["X"]
        _, clusters = uf_decode(g, bits(g, []))
        with pytest.raises(ValueError):
            cluster_gap(g, clusters, "bogus")

    @pytest.mark.parametrize("d,p", [(3, 0.05), (5, 0.05)])
    def test_lower_bound(self, d, p):
        m = code(d, p)
        g = m.graphs["X"]
        _, parts, _ = sample_batch(m, 5, 0, 500)
        for k in range(500):
            det = parts["X"][k]
            _, clusters = uf_decode(g, det)
            gc = cluster_gap(g, clusters).gap
            assert gc <= complementary_gap(g, det).gap + 1e-9
            assert gc >= 0.0

    @given(st.integers(0, 2**32 - 1))
    def test_lower_bound_property(self, seed):
        m = code(3, 0.1)
        g = m.graphs["X"]
        _, parts, _ = sample_batch(m, seed, 0, 5)
        for det in parts["X"]:
            _, clusters = uf_decode(g, det)
            assert cluster_gap(g, clusters).gap <= complementary_gap(g, det).gap + 1e-9
