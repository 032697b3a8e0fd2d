"""Independent reference computations used by the tests.

Nothing here imports the decoders: distances come from scipy's csgraph and
matchings from an exhaustive subset dynamic programme.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra as sp_dijkstra

from decswitch.code_model import DecodingGraph


class GraphOracle:
    """Detector distances and boundary distances of a decoding graph.

    Boundary nodes are never used as intermediate vertices, so a
    detector-to-detector distance never flips the observable.
    """

    def __init__(self, graph: DecodingGraph):
        nd = graph.num_detectors
        u, v, w = graph.edge_u, graph.edge_v, graph.weights
        inner = (u < nd) & (v < nd)
        # Parallel edges do not occur after merging, so coo -> csr keeps weights.
        m = sp.coo_matrix((w[inner], (u[inner], v[inner])), shape=(nd, nd)).tocsr()
        self.dist = sp_dijkstra(m, directed=False)
        self.nd = nd
        to_b0 = np.full(nd, math.inf)
        to_b1 = np.full(nd, math.inf)
        for a, b, x in zip(u, v, w):
            det, other = (a, b) if a < nd else (b, a)
            if other == graph.boundary0:
                to_b0[det] = min(to_b0[det], x)
            elif other == graph.boundary1:
                to_b1[det] = min(to_b1[det], x)
        # Distance from every detector to each boundary through detectors.
        self.b0 = np.min(self.dist + to_b0[None, :], axis=1)
        self.b1 = np.min(self.dist + to_b1[None, :], axis=1)
        self.logical = float(np.min(to_b0 + self.b1))

    def class_weights(self, defects) -> tuple[float, float]:
        """Lightest correction predicting observable flip 0 and 1."""
        dets = [int(x) for x in defects]
        k = len(dets)
        dd = self.dist[np.ix_(dets, dets)]
        d0 = self.b0[dets]
        d1 = self.b1[dets]

        @lru_cache(maxsize=None)
        def best(mask: int) -> tuple[float, float]:
            if mask == 0:
                return (0.0, math.inf)
            i = (mask & -mask).bit_length() - 1
            rest = mask & ~(1 << i)
            out = [math.inf, math.inf]

            def relax(cost: float, flip: int, sub: tuple[float, float]) -> None:
                for par in (0, 1):
                    c = cost + sub[par]
                    if c < out[par ^ flip]:
                        out[par ^ flip] = c

            sub = best(rest)
            relax(d0[i], 1, sub)
            relax(d1[i], 0, sub)
            j_mask = rest
            while j_mask:
                j = (j_mask & -j_mask).bit_length() - 1
                j_mask &= j_mask - 1
                relax(dd[i, j], 0, best(rest & ~(1 << j)))
            return out[0], out[1]

        w0, w1 = best((1 << k) - 1)
        # An extra boundary-to-boundary path switches the class.
        return min(w0, w1 + self.logical), min(w1, w0 + self.logical)

    def mwpm_weight(self, defects) -> float:
        return min(self.class_weights(defects))


def pairing_weight(dist: np.ndarray, boundary: np.ndarray) -> float:
    """Minimum over all pairings where any vertex may pair with the boundary.

    Plain recursion over every perfect matching of the boundary-augmented
    vertex set; exponential, for tiny instances only.
    """
    k = len(boundary)

    def rec(left: tuple[int, ...]) -> float:
        if not left:
            return 0.0
        i, rest = left[0], left[1:]
        best = boundary[i] + rec(rest)
        for n, j in enumerate(rest):
            best = min(best, dist[i, j] + rec(rest[:n] + rest[n + 1 :]))
        return best

    return rec(tuple(range(k)))


def exact_posteriors(h: np.ndarray, priors: np.ndarray, syndrome: np.ndarray) -> np.ndarray:
    """``P(e_m = 1 | H e = s)`` by enumerating all ``2**n`` patterns."""
    h = np.asarray(h, dtype=np.int64)
    n = h.shape[1]
    num = np.zeros(n)
    total = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        e = np.array(bits)
        if np.array_equal(h @ e % 2, syndrome):
            w = float(np.prod(np.where(e == 1, priors, 1.0 - priors)))
            total += w
            num += w * e
    return num / total


def exact_class_masses(h, priors, observables, syndrome) -> dict[tuple[int, ...], float]:
    """Joint probability of the syndrome and each logical class, by full enumeration."""
    h = np.asarray(h, dtype=np.int64)
    obs = np.asarray(observables, dtype=np.int64)
    n = h.shape[1]
    out: dict[tuple[int, ...], float] = {}
    for bits in itertools.product((0, 1), repeat=n):
        e = np.array(bits)
        if np.array_equal(h @ e % 2, syndrome):
            cls = tuple(int(x) for x in obs @ e % 2)
            out[cls] = out.get(cls, 0.0) + float(np.prod(np.where(e == 1, priors, 1.0 - priors)))
    return out


def exact_dqml_single_round(model):
    """Class masses for every syndrome of a one-round code model.

    The three independent X, Y and Z mechanisms of a qubit fold into a
    four-outcome channel keyed by (syndrome, class); the product over
    qubits then enumerates 4**n outcomes.  Returns
    ``{syndrome_key: {class: mass}}``.
    """
    cm = model.check_matrix
    if model.spec.rounds != 1:
        raise ValueError("one round only")
    h = cm.matrix.toarray() % 2
    weights = 1 << np.arange(cm.num_detectors, dtype=np.int64)
    col_syn = h.T.astype(np.int64) @ weights
    col_cls = cm.observables[0].astype(np.int64) | (cm.observables[1].astype(np.int64) << 1)
    syn = np.zeros(1, dtype=np.int64)
    cls = np.zeros(1, dtype=np.int64)
    prob = np.ones(1)
    for q in range(len(model.qubits)):
        mechs = [3 * q + k for k in range(3)]
        channel: dict[tuple[int, int], float] = {}
        for pattern in itertools.product((0, 1), repeat=3):
            s = c = 0
            pr = 1.0
            for m, b in zip(mechs, pattern):
                if b:
                    s ^= int(col_syn[m])
                    c ^= int(col_cls[m])
                pr *= cm.priors[m] if b else 1.0 - cm.priors[m]
            channel[(s, c)] = channel.get((s, c), 0.0) + pr
        opt_s = np.array([k[0] for k in channel], dtype=np.int64)
        opt_c = np.array([k[1] for k in channel], dtype=np.int64)
        opt_p = np.array(list(channel.values()))
        syn = (syn[:, None] ^ opt_s[None, :]).ravel()
        cls = (cls[:, None] ^ opt_c[None, :]).ravel()
        prob = (prob[:, None] * opt_p[None, :]).ravel()
    out: dict[int, dict[tuple[int, int], float]] = {}
    uniq, inv = np.unique(syn * 4 + cls, return_inverse=True)
    mass = np.bincount(inv, weights=prob)
    for k, m in zip(uniq, mass):
        s, c = int(k) // 4, int(k) % 4
        out.setdefault(s, {})[(c & 1, c >> 1)] = float(m)
    return out


def syndrome_key(syndrome) -> int:
    s = np.asarray(syndrome, dtype=np.int64)
    return int(s @ (1 << np.arange(len(s), dtype=np.int64)))
