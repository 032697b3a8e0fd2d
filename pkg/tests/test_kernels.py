"""The compiled kernels and the pure-Python fallback must agree exactly."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decswitch import _fallback as py
from decswitch.backlog import SchedulerParams, double_commit_size, sliding_commit_size
from decswitch.code_model import sample_batch
from decswitch.strong import TannerGraph

from .conftest import code
from .oracles import GraphOracle, pairing_weight

cy = pytest.importorskip("decswitch._core")


def graph_args(g):
    indptr, nbr, eid = g.csr
    return indptr, nbr, eid


class TestShortestPaths:
    @pytest.mark.parametrize("d,r", [(3, 3), (5, 2)])
    def test_dijkstra(self, d, r):
        g = code(d, 0.05, rounds=r).graphs["X"]
        a = graph_args(g)
        for s in (0, g.num_detectors - 1, g.boundary0, g.boundary1):
            dp, pp = py.dijkstra(*a, g.weights, s, g.num_detectors)
            dc, pc = cy.dijkstra(*a, g.weights, s, g.num_detectors)
            assert np.array_equal(dp, dc) and np.array_equal(pp, pc)

    def test_matches_scipy(self):
        g = code(5, 0.05).graphs["Z"]
        o = GraphOracle(g)
        dist, _ = cy.dijkstra(*graph_args(g), g.weights, 3, g.num_detectors)
        assert np.allclose(dist[: g.num_detectors], o.dist[3], rtol=1e-12)
        assert dist[g.boundary0] == pytest.approx(o.b0[3], rel=1e-12)

    def test_multi(self):
        g = code(3, 0.05).graphs["X"]
        src = np.array([0, 4, g.boundary0])
        dp, pp = py.multi_dijkstra(*graph_args(g), g.weights, src, g.num_detectors)
        dc, pc = cy.multi_dijkstra(*graph_args(g), g.weights, src, g.num_detectors)
        assert np.array_equal(dp, dc) and np.array_equal(pp, pc)


def matching_weight(wmat, mate):
    return sum(int(wmat[i, mate[i]]) for i in range(len(mate)) if i < mate[i])


class TestMatching:
    @settings(max_examples=60)
    @given(st.integers(0, 5).map(lambda k: 2 * k), st.integers(0, 2**31 - 1))
    def test_against_enumeration(self, n, seed):
        rng = np.random.default_rng(seed)
        w = rng.integers(0, 1000, size=(n, n))
        w = np.triu(w, 1) + np.triu(w, 1).T
        # pairing_weight with infinite boundary enumerates perfect matchings.
        ref = pairing_weight(w.astype(float), np.full(n, np.inf)) if n else 0.0
        for impl in (py, cy):
            mate = impl.min_weight_perfect_matching(w)
            assert sorted(mate[mate]) == list(range(n))
            assert matching_weight(w, mate) == ref

    def test_backends_agree_on_weight(self, rng):
        for _ in range(20):
            n = 2 * int(rng.integers(1, 12))
            w = rng.integers(0, 2**40, size=(n, n))
            w = np.triu(w, 1) + np.triu(w, 1).T
            assert matching_weight(w, py.min_weight_perfect_matching(w)) == matching_weight(
                w, cy.min_weight_perfect_matching(w))


class TestUnionFind:
    @pytest.mark.parametrize("d,p", [(3, 0.08), (5, 0.05)])
    def test_grow_and_peel(self, d, p):
        m = code(d, p)
        g = m.graphs["X"]
        a = graph_args(g)
        _, parts, _ = sample_batch(m, 21, 0, 100)
        for det in parts["X"]:
            dets = np.flatnonzero(det).astype(np.int64)
            gp = py.uf_grow(*a, g.edge_u, g.edge_v, g.weights, dets, g.num_detectors)
            gc = cy.uf_grow(*a, g.edge_u, g.edge_v, g.weights, dets, g.num_detectors)
            assert np.array_equal(gp[0], gc[0]) and np.array_equal(gp[1], gc[1]) and gp[2] == gc[2]
            full = (gp[0] >= g.weights).astype(np.uint8)
            cp, pp = py.uf_peel(*a, full, gp[1], dets, g.num_detectors)
            cc, pc = cy.uf_peel(*a, full, gc[1], dets, g.num_detectors)
            assert list(cp) == list(cc)
            assert [tuple(x) for x in pp] == [tuple(x) for x in pc]


class TestBP:
    @pytest.mark.parametrize("damping,tol", [(0.5, -1.0), (0.0, 1e-13), (0.3, 1e-8)])
    def test_agree(self, damping, tol):
        m = code(3, 0.05)
        t = TannerGraph.from_check_matrix(m.check_matrix)
        _, parts, _ = sample_batch(m, 4, 0, 30)
        for k in range(30):
            syn = np.concatenate([parts["X"][k], parts["Z"][k]]).astype(np.uint8)
            a = py.bp_decode(*t.structure, t.prior_llr, syn, 40, damping, tol)
            b = cy.bp_decode(*t.structure, t.prior_llr, syn, 40, damping, tol)
            assert a[1] == b[1] and a[2] == b[2]
            assert np.allclose(a[0], b[0], rtol=1e-12, atol=1e-12)


class TestBacklogRuns:
    @pytest.mark.parametrize("scheme", ["naive", "sliding", "double"])
    @pytest.mark.parametrize("gamma", [0.0, 3e-3, 5e-2])
    def test_agree(self, scheme, gamma):
        p = SchedulerParams(tau_dec_weak=0.7, tau_dec_strong=10.0, t_comm_strong=10.0, d=21,
                            gamma=gamma, scheme=scheme, n_gate=800)
        for traj in range(4):
            for force in (0, 2):
                a, b = (self._run(impl, p, traj, force) for impl in (py, cy))
                assert np.allclose(a[0], b[0], rtol=1e-12, atol=0)
                assert np.array_equal(a[1], b[1])
                assert a[2] == b[2] and a[3] == b[3]
                assert a[4] == pytest.approx(b[4], rel=1e-12)

    @staticmethod
    def _run(impl, p, traj, force):
        r0 = p.initial_backlog
        if p.scheme == "naive":
            return impl.naive_run(p.f_weak, p.f_strong, p.comm_weak, p.comm_strong, float(p.r_op), float(p.d),
                                  p.gamma, r0, p.n_gate, p.cap, 99, traj, True, force)
        if p.scheme == "sliding":
            return impl.sliding_run(p.f_weak, p.f_strong, p.comm_weak, p.comm_strong, float(p.r_op), float(p.d),
                                    p.gamma, float(sliding_commit_size(p)), float(p.r_buf), r0, p.n_gate, p.cap,
                                    99, traj, True, force)
        return impl.double_run(p.comm_weak, p.comm_strong, p.f_strong, float(p.r_op), float(p.d), p.gamma,
                               float(double_commit_size(p)), float(p.r_buf), float(p.alpha), r0, p.n_gate, p.cap,
                               99, traj, True, force)
