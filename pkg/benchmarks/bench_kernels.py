"""Compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N wall time per kernel for each backend and the speedup.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from decswitch import _fallback
from decswitch.backlog import SchedulerParams, double_commit_size, sliding_commit_size
from decswitch.code_model import NoiseParams, SurfaceCodeSpec, build_code, sample_batch
from decswitch.strong import TannerGraph

try:
    from decswitch import _core
except ImportError:  # pragma: no cover - depends on the build
    _core = None


def workloads(d: int = 5, p: float = 0.05, shots: int = 50):
    """Named closures ``impl -> None`` exercising one kernel each on fixed inputs."""
    model = build_code(SurfaceCodeSpec(d), NoiseParams(p))
    g = model.graphs["X"]
    indptr, nbr, eid = g.csr
    nd = g.num_detectors
    _, parts, _ = sample_batch(model, 1, 0, shots)
    defects = [np.flatnonzero(x).astype(np.int64) for x in parts["X"]]
    tanner = TannerGraph.from_check_matrix(model.check_matrix)
    syndromes = [np.concatenate([parts["X"][k], parts["Z"][k]]).astype(np.uint8) for k in range(shots)]
    rng = np.random.default_rng(0)
    mats = []
    for _ in range(shots):
        w = rng.integers(0, 2**40, size=(16, 16))
        mats.append(np.triu(w, 1) + np.triu(w, 1).T)
    sched = SchedulerParams(tau_dec_weak=0.7, tau_dec_strong=10.0, t_comm_strong=10.0, d=21, gamma=5e-3, n_gate=10_000)

    def dijkstra(k):
        for s in range(nd):
            k.dijkstra(indptr, nbr, eid, g.weights, s, nd)

    def matching(k):
        for w in mats:
            k.min_weight_perfect_matching(w)

    def union_find(k):
        for dets in defects:
            growth, root, _ = k.uf_grow(indptr, nbr, eid, g.edge_u, g.edge_v, g.weights, dets, nd)
            k.uf_peel(indptr, nbr, eid, (growth >= g.weights).astype(np.uint8), root, dets, nd)

    def bp(k):
        for syn in syndromes:
            k.bp_decode(*tanner.structure, tanner.prior_llr, syn, 30, 0.5)

    def backlog(k):
        p = sched
        r0 = p.initial_backlog
        for t in range(5):
            k.naive_run(p.f_weak, p.f_strong, p.comm_weak, p.comm_strong, float(p.r_op), float(p.d), p.gamma,
                        r0, p.n_gate, p.cap, 0, t, False, 0)
            k.sliding_run(p.f_weak, p.f_strong, p.comm_weak, p.comm_strong, float(p.r_op), float(p.d), p.gamma,
                          float(sliding_commit_size(p)), float(p.r_buf), r0, p.n_gate, p.cap, 0, t, False, 0)
            k.double_run(p.comm_weak, p.comm_strong, p.f_strong, float(p.r_op), float(p.d), p.gamma,
                         float(double_commit_size(p)), float(p.r_buf), float(p.alpha), r0, p.n_gate, p.cap,
                         0, t, False, 0)

    return {"dijkstra": dijkstra, "matching": matching, "union_find": union_find, "bp": bp, "backlog": backlog}


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    backends = {"python": _fallback}
    if _core is not None:
        backends["cython"] = _core
    print(f"{'kernel':<12}" + "".join(f"{name:>12}" for name in backends) + f"{'speedup':>10}")
    for name, work in workloads().items():
        times = {b: min(timeit.repeat(lambda k=k: work(k), number=1, repeat=args.repeat)) for b, k in backends.items()}
        speedup = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<12}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times.values()) + f"{speedup:>9.1f}x")


if __name__ == "__main__":
    main()
