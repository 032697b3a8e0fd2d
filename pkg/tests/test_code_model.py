from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse.csgraph import shortest_path
import scipy.sparse as sp

from decswitch.code_model import (
    KIND_MEAS,
    KIND_Y,
    NoiseParams,
    SurfaceCodeSpec,
    build_graphs,
    detection_events,
    edge_weight,
    merge_probability,
    sample_batch,
    sample_shot,
)

from .conftest import code


def space_like_hops(graph) -> int:
    """Fewest space-like edges on a path between the two boundary nodes."""
    keep = [k for k, e in enumerate(graph.edges) if not _is_time_like(graph, e)]
    u, v = graph.edge_u[keep], graph.edge_v[keep]
    n = graph.num_nodes
    adj = sp.coo_matrix((np.ones(len(keep)), (u, v)), shape=(n, n))
    dist = shortest_path(adj, directed=False, unweighted=True, indices=[graph.boundary0])
    return int(dist[0, graph.boundary1])


def _is_time_like(graph, edge) -> bool:
    nd = graph.num_detectors
    return edge.u < nd and edge.v < nd and edge.u % graph.num_checks == edge.v % graph.num_checks


class TestSpecs:
    @pytest.mark.parametrize("d", [1, 2, 4, 0, -3])
    def test_rejects_bad_distance(self, d):
        with pytest.raises(ValueError):
            SurfaceCodeSpec(d)

    @pytest.mark.parametrize("p", [0.0, 0.5, -0.1, 0.7])
    def test_rejects_bad_rate(self, p):
        with pytest.raises(ValueError):
            NoiseParams(p)

    def test_defaults(self):
        spec = SurfaceCodeSpec(5)
        assert spec.rounds == 5
        assert spec.decoding_basis == "X"
        assert SurfaceCodeSpec(3, 1, "X").decoding_basis == "Z"
        with pytest.raises(ValueError):
            SurfaceCodeSpec(3, 0)
        with pytest.raises(ValueError):
            SurfaceCodeSpec(3, basis="Y")


class TestGraphs:
    def test_build_graphs_triplet(self):
        gx, gz, cm = build_graphs(SurfaceCodeSpec(3), NoiseParams(0.1))
        assert (gx.basis, gz.basis) == ("X", "Z")
        assert cm.num_detectors == gx.num_detectors + gz.num_detectors

    def test_detector_counts(self):
        m = code(5, 0.05)
        for g in m.graphs.values():
            assert g.num_checks == (5 * 5 - 1) // 2
            assert g.num_detectors == g.num_checks * 5
            assert g.num_nodes == g.num_detectors + 2

    @pytest.mark.parametrize("d", [3, 5, 7])
    def test_space_like_logical_length(self, d):
        m = code(d, 0.1, rounds=3)
        for g in m.graphs.values():
            assert space_like_hops(g) == d

    def test_weights_positive_and_monotone(self):
        assert edge_weight(0.01) == pytest.approx(math.log(99.0), abs=1e-12)
        ps = [0.4, 0.2, 0.1, 0.01, 1e-4, 1e-8]
        ws = [edge_weight(p) for p in ps]
        assert all(w > 0 for w in ws)
        assert all(a < b for a, b in zip(ws, ws[1:]))
        for g in code(3, 0.01, rounds=1).graphs.values():
            assert np.all(g.weights > 0)

    def test_merge_probability(self):
        p = 0.03
        assert merge_probability(p, p) == pytest.approx(2 * p * (1 - p), rel=1e-15)
        assert merge_probability(0.0, 0.2) == 0.2

    def test_parallel_edges_merged(self):
        m = code(5, 0.05)
        priors = m.check_matrix.priors
        for g in m.graphs.values():
            keys = list(zip(g.edge_u.tolist(), g.edge_v.tolist()))
            assert len(keys) == len(set(keys))
            for e in g.edges:
                q = 0.0
                for mech in e.mechanisms:
                    q = merge_probability(q, priors[mech])
                assert e.probability == pytest.approx(q, rel=1e-14)
                assert e.weight == pytest.approx(edge_weight(q), rel=1e-14)

    def test_observable_edges_touch_b0(self):
        for d in (3, 5, 7):
            for g in code(d, 0.05).graphs.values():
                for e in g.edges:
                    assert e.observable == (g.boundary0 in (e.u, e.v))

    def test_matchable(self):
        m = code(5, 0.05)
        cm = m.check_matrix
        nx = cm.num_x_detectors
        for dets in cm.mechanism_detectors:
            assert np.count_nonzero(dets < nx) <= 2
            assert np.count_nonzero(dets >= nx) <= 2

    def test_y_partners(self):
        # Oracle: every Y mechanism of the check matrix must label exactly one
        # edge per graph.
        m = code(5, 0.05)
        y_mechs = set(np.flatnonzero(m.check_matrix.kinds == KIND_Y).tolist())
        count = {"X": {}, "Z": {}}
        for b, g in m.graphs.items():
            for e in g.edges:
                for tag in e.correlation_tags:
                    count[b][tag] = count[b].get(tag, 0) + 1
        assert set(count["X"]) == y_mechs
        assert set(count["Z"]) == y_mechs
        assert all(c == 1 for c in count["X"].values())
        assert all(c == 1 for c in count["Z"].values())


class TestSampling:
    def test_zero_rate(self):
        m = code(3, 0.05)
        sample, events = sample_shot(m, seed=7, index=3, p=0.0)
        assert not sample.errors.any()
        assert not events.detectors["X"].any() and not events.detectors["Z"].any()
        assert events.observables == {"X": 0, "Z": 0}

    @pytest.mark.parametrize("t", [0, 1, 3])
    def test_single_measurement_flip(self, t):
        m = code(5, 0.05)
        cm = m.check_matrix
        g = m.graphs["X"]
        s = 4
        # Find the measurement mechanism of X-graph check s between rounds t and t + 1.
        meas = np.flatnonzero((cm.kinds == KIND_MEAS) & (cm.locations[:, 0] == s) & (cm.locations[:, 1] == t))
        assert len(meas) == 1
        e = np.zeros(cm.num_mechanisms, dtype=np.uint8)
        e[meas] = 1
        events = detection_events(m, e)
        assert set(events.defects("X").tolist()) == {g.detector(s, t), g.detector(s, t + 1)}
        assert not events.detectors["Z"].any()
        assert events.observables == {"X": 0, "Z": 0}

    def test_deterministic(self):
        m = code(3, 0.05)
        a = sample_shot(m, 2**63 + 5, 17)
        b = sample_shot(m, 2**63 + 5, 17)
        c = sample_shot(m, 2**63 + 5, 18)
        assert np.array_equal(a[0].errors, b[0].errors)
        assert np.array_equal(a[1].detectors["X"], b[1].detectors["X"])
        assert not np.array_equal(a[0].errors, c[0].errors)

    def test_batch_rows_match_single_shots(self):
        m = code(3, 0.08)
        errors, parts, flips = sample_batch(m, 99, 10, 20)
        for k in range(20):
            sample, events = sample_shot(m, 99, 10 + k)
            assert np.array_equal(errors[k], sample.errors)
            assert np.array_equal(parts["Z"][k], events.detectors["Z"])
            assert flips["X"][k] == events.observables["X"]

    def test_parity_soundness(self):
        # Independent re-evaluation: XOR of each fired mechanism's detector list.
        m = code(3, 0.05)
        cm = m.check_matrix
        errors, parts, flips = sample_batch(m, 2024, 0, 10_000)
        syn = np.concatenate([parts["X"], parts["Z"]], axis=1)
        violations = 0
        for k in range(len(errors)):
            ref = np.zeros(cm.num_detectors, dtype=np.uint8)
            obs = np.zeros(2, dtype=np.uint8)
            for mech in np.flatnonzero(errors[k]):
                ref[cm.mechanism_detectors[mech]] ^= 1
                obs ^= cm.observables[:, mech]
            violations += int(not np.array_equal(ref, syn[k]))
            violations += int(obs[0] != flips["X"][k] or obs[1] != flips["Z"][k])
        assert violations == 0

    @given(st.integers(0, 2**64 - 1), st.integers(0, 2**20))
    def test_events_follow_check_matrix(self, seed, index):
        m = code(3, 0.2)
        sample, events = sample_shot(m, seed, index)
        syn = m.check_matrix.syndrome(sample.errors)
        assert np.array_equal(np.concatenate([events.detectors["X"], events.detectors["Z"]]), syn)

    def test_sampling_rate(self):
        m = code(3, 0.06)
        errors, _, _ = sample_batch(m, 1, 0, 4000)
        cm = m.check_matrix
        data = cm.kinds != KIND_MEAS
        rate = errors[:, data].mean()
        sigma = math.sqrt(0.02 * 0.98 / errors[:, data].size)
        assert abs(rate - 0.02) < 5 * sigma
