"""Strong decoder: belief propagation followed by matching on reweighted graphs.

BP runs on the joint Tanner graph of all error mechanisms and all detectors
of both bases, so a Y error seen by both graphs raises the posterior of the
corresponding edge in each.  Posteriors are merged back onto the matching
edges with the same parallel-merge rule used for the priors and the result
is matched exactly.

:func:`mle_oracle` enumerates low-weight error patterns and is meant for
tests only.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import kernels
from .code_model import CheckMatrix, CodeModel, DecodingGraph, DetectionEvents
from .weak import Matching, PathTable, defects_of, match_defects

#: Posteriors are clamped to ``[P_MIN, 1 - P_MIN]``.
P_MIN = 1e-9
DEFAULT_DAMPING = 0.5
DEFAULT_MAX_ITERS = 30


@dataclass
class TannerGraph:
    """Mechanism/detector incidence with priors and observable annotations."""

    matrix: sp.csr_matrix
    priors: np.ndarray
    observables: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.matrix = sp.csr_matrix(self.matrix, dtype=np.int64)
        self.matrix.sort_indices()
        self.priors = np.asarray(self.priors, dtype=np.float64)
        if self.matrix.shape[1] != len(self.priors):
            raise ValueError("one prior per mechanism required")
        if np.any(self.priors <= 0.0) or np.any(self.priors >= 1.0):
            raise ValueError("priors must lie in (0, 1)")

    @classmethod
    def from_check_matrix(cls, cm: CheckMatrix) -> TannerGraph:
        return cls(cm.matrix, cm.priors, cm.observables)

    @property
    def num_checks(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_mechanisms(self) -> int:
        return self.matrix.shape[1]

    @cached_property
    def structure(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(chk_ptr, chk_var, var_ptr, var_edge)`` arrays for the BP kernel."""
        h = self.matrix
        chk_ptr = h.indptr.astype(np.int64)
        chk_var = h.indices.astype(np.int64)
        order = np.argsort(chk_var, kind="stable")
        var_ptr = np.zeros(self.num_mechanisms + 1, dtype=np.int64)
        np.add.at(var_ptr, chk_var + 1, 1)
        np.cumsum(var_ptr, out=var_ptr)
        return chk_ptr, chk_var, var_ptr, order.astype(np.int64)

    @cached_property
    def prior_llr(self) -> np.ndarray:
        return np.log((1.0 - self.priors) / self.priors)


@dataclass
class Marginals:
    """BP output: clamped posterior per mechanism."""

    posteriors: np.ndarray
    converged: bool
    iterations: int


def bp_posteriors(
    tanner: TannerGraph,
    syndrome,
    max_iters: int = DEFAULT_MAX_ITERS,
    damping: float = DEFAULT_DAMPING,
    tol: float | None = None,
) -> Marginals:
    """Sum-product posteriors conditioned on ``syndrome``.

    ``syndrome`` is either :class:`DetectionEvents` (bases concatenated X
    then Z, matching the check matrix rows) or a raw bit array.

    Iteration stops once the hard decisions have been stable for two
    iterations.  With ``tol`` set, the largest change of a posterior
    log-likelihood ratio must also have dropped to ``tol``; on a cycle-free
    graph this runs until the messages reach the exact marginals.
    """
    if isinstance(syndrome, DetectionEvents):
        syn = np.concatenate([syndrome.detectors["X"], syndrome.detectors["Z"]])
    else:
        syn = np.asarray(syndrome)
    syn = syn.astype(np.uint8)
    if syn.shape != (tanner.num_checks,):
        raise ValueError(f"expected {tanner.num_checks} syndrome bits, got shape {syn.shape}")
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")
    if max_iters < 0:
        raise ValueError("max_iters must be non-negative")
    if tol is not None and not tol >= 0.0:
        raise ValueError("tol must be non-negative")
    if max_iters == 0:
        return Marginals(np.clip(tanner.priors, P_MIN, 1.0 - P_MIN), False, 0)
    chk_ptr, chk_var, var_ptr, var_edge = tanner.structure
    llr, iters, converged = kernels.bp_decode(
        chk_ptr, chk_var, var_ptr, var_edge, tanner.prior_llr, syn, int(max_iters), float(damping),
        -1.0 if tol is None else float(tol),
    )
    q = 1.0 / (1.0 + np.exp(np.clip(llr, -700.0, 700.0)))
    return Marginals(np.clip(q, P_MIN, 1.0 - P_MIN), bool(converged), int(iters))


def _merge_columns(graph: DecodingGraph) -> np.ndarray:
    width = max(len(e.mechanisms) for e in graph.edges)
    idx = np.full((len(graph.edges), width), -1, dtype=np.int64)
    for k, e in enumerate(graph.edges):
        idx[k, : len(e.mechanisms)] = e.mechanisms
    return idx


_MERGE_CACHE: dict[int, tuple[DecodingGraph, np.ndarray, np.ndarray]] = {}


def _merge_plan(graph: DecodingGraph) -> tuple[np.ndarray, np.ndarray]:
    hit = _MERGE_CACHE.get(id(graph))
    if hit is None or hit[0] is not graph:
        obs = np.array([e.observable for e in graph.edges], dtype=np.int64)
        if len(_MERGE_CACHE) > 32:
            _MERGE_CACHE.pop(next(iter(_MERGE_CACHE)))
        hit = (graph, _merge_columns(graph), obs)
        _MERGE_CACHE[id(graph)] = hit
    return hit[1], hit[2]


def edge_posteriors(graph: DecodingGraph, posteriors: np.ndarray) -> np.ndarray:
    """Per-edge flip probability from mechanism posteriors.

    Mechanisms are folded in the same order as the priors were when the
    graph was built, so prior marginals reproduce the graph's probabilities
    exactly.
    """
    idx, _ = _merge_plan(graph)
    q = np.zeros(idx.shape[0], dtype=np.float64)
    for col in range(idx.shape[1]):
        m = idx[:, col]
        x = np.where(m >= 0, posteriors[np.maximum(m, 0)], 0.0)
        q = q * (1.0 - x) + x * (1.0 - q)
    return q


def reweighted_match(graph: DecodingGraph, edge_q: np.ndarray, events) -> Matching:
    """Exact matching on ``graph`` with edge probabilities ``edge_q``.

    Edges with ``q > 1/2`` have negative log-likelihood weight.  They are
    applied up front (toggling their endpoint detectors and the observable)
    and then matched with weight ``|w|``, which is exact for matching with
    negative weights.
    """
    _, obs = _merge_plan(graph)
    with np.errstate(divide="ignore"):
        w = np.log((1.0 - edge_q) / edge_q)
    neg = np.flatnonzero(w < 0.0)
    det = np.zeros(graph.num_nodes, dtype=np.uint8)
    det[defects_of(graph, events)] = 1
    preset_flip = 0
    if len(neg):
        np.bitwise_xor.at(det, graph.edge_u[neg], 1)
        np.bitwise_xor.at(det, graph.edge_v[neg], 1)
        preset_flip = int(obs[neg].sum() % 2)
    dets = np.flatnonzero(det[: graph.num_detectors]).astype(np.int64)
    absw = np.abs(w)
    sources = np.concatenate([dets, [graph.boundary0, graph.boundary1]]).astype(np.int64)
    table = PathTable(graph, sources, absw)
    m = match_defects(table, dets, graph.basis)
    m.weight = float(m.weight + w[neg].sum())
    m.flip ^= preset_flip
    m._preset = neg
    return m


def belief_match(
    graphs,
    marginals: Marginals,
    events,
    bases=("X", "Z"),
) -> dict[str, Matching]:
    """Belief-matching predictions for each requested basis.

    ``graphs`` is a :class:`CodeModel` or a mapping basis -> graph.
    """
    if isinstance(graphs, CodeModel):
        graphs = graphs.graphs
    out = {}
    for b in bases:
        g = graphs[b]
        q = edge_posteriors(g, marginals.posteriors)
        out[b] = reweighted_match(g, q, events)
    return out


@dataclass
class StrongDecoder:
    """Belief-matching bound to a code model.

    ``latency_factor`` is carried for scheduler coupling; it does not slow
    the decoder down.
    """

    model: CodeModel
    max_iters: int = DEFAULT_MAX_ITERS
    damping: float = DEFAULT_DAMPING
    latency_factor: float = 10.0
    tanner: TannerGraph = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.tanner = TannerGraph.from_check_matrix(self.model.check_matrix)

    def decode(self, events: DetectionEvents, bases=None) -> dict[str, Matching]:
        if bases is None:
            bases = (self.model.spec.decoding_basis,)
        marg = bp_posteriors(self.tanner, events, self.max_iters, self.damping)
        return belief_match(self.model.graphs, marg, events, bases)


# --------------------------------------------------------------------------
# Maximum-likelihood oracle (tests only)
# --------------------------------------------------------------------------


@dataclass
class MLEResult:
    """Joint probability mass ``P(pattern, syndrome)`` summed per logical class.

    Classes are tuples of observable flips, one per observable row.
    ``tail_bound`` bounds the mass of all patterns heavier than ``w_max``.
    """

    masses: dict[tuple[int, ...], float]
    argmax: tuple[int, ...]
    tail_bound: float

    @property
    def certain(self) -> bool:
        """The argmax cannot change whatever the unenumerated patterns do."""
        ranked = sorted(self.masses.values(), reverse=True)
        second = ranked[1] if len(ranked) > 1 else 0.0
        return ranked[0] - second > self.tail_bound


def _tail_probability(priors: np.ndarray, w_max: int) -> float:
    # Poisson-binomial distribution of the number of fired mechanisms.
    dist = np.zeros(w_max + 2)
    dist[0] = 1.0
    for p in priors:
        nxt = dist * (1.0 - p)
        nxt[1:] += dist[:-1] * p
        nxt[-1] += dist[-1] * p  # overflow bin keeps "more than w_max"
        dist = nxt
    return float(max(0.0, 1.0 - dist[: w_max + 1].sum()))


def mle_oracle(tanner: TannerGraph, syndrome, w_max: int) -> MLEResult:
    """Sum pattern probabilities per logical class over all syndrome-consistent
    patterns of at most ``w_max`` mechanisms."""
    if tanner.observables is None:
        raise ValueError("tanner graph carries no observables")
    if isinstance(syndrome, DetectionEvents):
        syn = np.concatenate([syndrome.detectors["X"], syndrome.detectors["Z"]])
    else:
        syn = np.asarray(syndrome)
    syn = syn.astype(np.uint8)
    h = tanner.matrix.tocsc()
    cols = [h.indices[h.indptr[k] : h.indptr[k + 1]] for k in range(h.shape[1])]
    obs = np.asarray(tanner.observables, dtype=np.uint8)
    p = tanner.priors
    base = float(np.prod(1.0 - p))
    odds = p / (1.0 - p)
    masses: dict[tuple[int, ...], float] = {}
    target = syn.astype(bool)
    n = tanner.num_mechanisms
    for w in range(w_max + 1):
        for combo in itertools.combinations(range(n), w):
            s = np.zeros(tanner.num_checks, dtype=bool)
            for m in combo:
                s[cols[m]] ^= True
            if not np.array_equal(s, target):
                continue
            cls = tuple(int(x) for x in (obs[:, list(combo)].sum(axis=1) % 2)) if w else (0,) * obs.shape[0]
            mass = base * math.prod(odds[m] for m in combo)
            masses[cls] = masses.get(cls, 0.0) + mass
    if not masses:
        raise ValueError(f"no syndrome-consistent pattern with at most {w_max} mechanisms; increase w_max")
    argmax = max(sorted(masses), key=lambda c: masses[c])
    return MLEResult(masses, argmax, _tail_probability(p, w_max))
