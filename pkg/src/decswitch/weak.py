"""Weak decoders with soft output.

* :func:`mwpm_decode` and :func:`complementary_gap`: exact minimum-weight
  perfect matching and the weight difference to the best correction in the
  other logical class.
* :func:`uf_decode` and :func:`cluster_gap`: Union-Find decoding and the
  boundary-to-boundary distance once its clusters are contracted.

Matching works on the defect-level complete graph.  Shortest paths between
all detectors and both boundaries are computed once per graph
(:class:`PathTable`).  Boundary super-nodes end paths but are never passed
through, so a detector-to-detector path never touches ``B0`` and a correction
flips the observable exactly when an odd number of its paths end on ``B0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np

from . import kernels
from .code_model import DecodingGraph, DetectionEvents

#: Natural-log weight to decibel factor, ``10 / ln 10``.
DB_PER_NEPER = 10.0 / math.log(10.0)

# Integer resolution for the blossom solver; see ``_solve``.
_SCALE_BITS = 50


def to_db(weight: float) -> float:
    return DB_PER_NEPER * weight


class PathTable:
    """Shortest paths from a set of source nodes of a decoding graph.

    By default every node is a source (all-pairs table).  ``weights``
    overrides the graph's own edge weights, e.g. after reweighting.
    """

    def __init__(self, graph: DecodingGraph, sources=None, weights=None):
        self.graph = graph
        n = graph.num_nodes
        if sources is None:
            sources = np.arange(n, dtype=np.int64)
        self.sources = np.asarray(sources, dtype=np.int64)
        w = graph.weights if weights is None else np.asarray(weights, dtype=np.float64)
        indptr, nbr, eid = graph.csr
        self.dist, self.pred = kernels.multi_dijkstra(indptr, nbr, eid, w, self.sources, graph.num_detectors)
        self.row = {int(s): k for k, s in enumerate(self.sources)}
        self.b0 = graph.boundary0
        self.b1 = graph.boundary1
        self.edge_u = graph.edge_u
        self.edge_v = graph.edge_v

    @cached_property
    def logical(self) -> float:
        """Weight of the lightest logical path between the boundaries."""
        return float(self.dist[self.row[self.b0], self.b1])

    def distance(self, source: int, target: int) -> float:
        return float(self.dist[self.row[source], target])

    def path_edges(self, source: int, target: int) -> list[int]:
        """Edges of the stored shortest path ``source -> target``."""
        pred = self.pred[self.row[source]]
        out = []
        v = target
        while v != source:
            e = int(pred[v])
            if e < 0:
                raise RuntimeError(f"no path from {source} to {target}")
            out.append(e)
            v = int(self.edge_u[e]) if int(self.edge_v[e]) == v else int(self.edge_v[e])
        return out


_TABLES: dict[int, tuple[DecodingGraph, PathTable]] = {}
_TABLE_CAP = 32


def path_table(graph: DecodingGraph) -> PathTable:
    """Cached :class:`PathTable` for ``graph`` (keyed by object identity)."""
    hit = _TABLES.get(id(graph))
    if hit is not None and hit[0] is graph:
        return hit[1]
    if len(_TABLES) >= _TABLE_CAP:
        _TABLES.pop(next(iter(_TABLES)))
    table = PathTable(graph)
    _TABLES[id(graph)] = (graph, table)
    return table


@dataclass
class Matching:
    """A correction given as defect pairs.

    ``pairs`` holds ``(a, b)`` with ``a`` a defect and ``b`` another defect or
    a boundary node id.  ``weight`` is in natural-log units and ``flip`` is the
    predicted observable flip of the graph's basis.
    """

    basis: str
    pairs: list[tuple[int, int]]
    weight: float
    flip: int
    _table: PathTable | None = field(default=None, repr=False, compare=False)
    _edges: np.ndarray | None = field(default=None, repr=False, compare=False)
    _preset: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def edges(self) -> np.ndarray:
        """Correction edge indices (each edge at most once, sorted)."""
        if self._edges is None:
            parity: dict[int, int] = {}
            if self._preset is not None:
                for e in self._preset:
                    parity[int(e)] = 1
            for a, b in self.pairs:
                for e in self._table.path_edges(a, b):
                    parity[e] = parity.get(e, 0) ^ 1
            self._edges = np.array(sorted(e for e, odd in parity.items() if odd), dtype=np.int64)
        return self._edges


@dataclass
class GapResult:
    """Soft output in dB; ``signed`` is set only when the true flip is known."""

    kind: Literal["complementary", "cluster"]
    gap: float
    signed: float | None = None
    w_min: float | None = None
    w_comp: float | None = None
    path_weight: float | None = None
    slack: float | None = None


@dataclass
class ClusterSet:
    """Final Union-Find clusters.

    ``root[u]`` is the cluster id of node ``u`` (``-1`` when untouched) and
    ``growth[e]`` the grown length of edge ``e``.
    """

    root: np.ndarray
    growth: np.ndarray
    full: np.ndarray
    defects: np.ndarray
    num_detectors: int
    dual: float = 0.0
    correction_weight: float = 0.0

    @cached_property
    def clusters(self) -> dict[int, np.ndarray]:
        """Cluster id to its sorted node array."""
        out: dict[int, list[int]] = {}
        for u in np.flatnonzero(self.root >= 0):
            out.setdefault(int(self.root[u]), []).append(int(u))
        return {r: np.array(nodes, dtype=np.int64) for r, nodes in sorted(out.items())}

    def cluster_edges(self, graph: DecodingGraph) -> dict[int, np.ndarray]:
        """Cluster id to the edges with both ends inside it."""
        ru = self.root[graph.edge_u]
        rv = self.root[graph.edge_v]
        inside = (ru >= 0) & (ru == rv)
        return {r: np.flatnonzero(inside & (ru == r)) for r in self.clusters}

    def is_valid(self) -> bool:
        """Every cluster holds an even number of defects or a boundary node."""
        for nodes in self.clusters.values():
            touches = bool(np.any(nodes >= self.num_detectors))
            odd = np.isin(self.defects, nodes).sum() % 2 == 1
            if odd and not touches:
                return False
        return True

    def __len__(self) -> int:
        return len(self.clusters)


def defects_of(graph: DecodingGraph, events) -> np.ndarray:
    """Fired detector ids of ``graph``'s basis from events or a raw array."""
    if isinstance(events, DetectionEvents):
        det = events.detectors[graph.basis]
    else:
        det = np.asarray(events)
    if det.shape != (graph.num_detectors,):
        raise ValueError(
            f"expected {graph.num_detectors} detector bits for basis {graph.basis}, got shape {det.shape}"
        )
    return np.flatnonzero(det).astype(np.int64)


def _solve(pair_w: np.ndarray, bd: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact min-weight perfect matching with an optional boundary partner.

    ``pair_w`` is the complete-graph weight matrix on ``k`` terminals and
    ``bd`` each terminal's boundary weight.  A virtual boundary vertex is
    added when ``k`` is odd; ``mate[i] == k`` then means "to the boundary".
    Weights are rounded to integers at ``2**-50`` of the largest weight so
    the blossom solver runs in exact arithmetic; the returned total is
    recomputed in floating point from the chosen pairs.
    """
    k = len(bd)
    n = k + (k & 1)
    full = np.zeros((n, n), dtype=np.float64)
    full[:k, :k] = pair_w
    if n > k:
        full[:k, k] = bd
        full[k, :k] = bd
    np.fill_diagonal(full, 0.0)
    top = float(full.max()) if n else 0.0
    scale = float(2**_SCALE_BITS) / top if top > 0 else 1.0
    ints = np.rint(full * scale).astype(np.int64)
    mate = kernels.min_weight_perfect_matching(ints)
    total = 0.0
    for i in range(n):
        j = int(mate[i])
        if j < 0:
            raise RuntimeError("matching solver returned an imperfect matching")
        if i < j:
            total += full[i, j]
    return mate, total


def _pairs_from(terminals, mate, direct, side, bd_node):
    """Translate a complete-graph matching into graph-level pairs.

    ``direct[i, j]`` tells whether terminals ``i`` and ``j`` connect directly
    or each to its nearest boundary (``side`` selects ``B0``/``B1``).
    Returns ``(pairs, flip)``.
    """
    k = len(terminals)
    pairs: list[tuple[int, int]] = []
    flip = 0
    for i in range(k):
        j = int(mate[i])
        if j == k:
            pairs.append((int(terminals[i]), int(bd_node[i])))
            flip ^= int(side[i])
        elif i < j:
            a, b = int(terminals[i]), int(terminals[j])
            if direct[i, j]:
                pairs.append((a, b))
            else:
                pairs.append((a, int(bd_node[i])))
                pairs.append((b, int(bd_node[j])))
                flip ^= int(side[i]) ^ int(side[j])
    return pairs, flip


def match_defects(table: PathTable, dets: np.ndarray, basis: str) -> Matching:
    """Exact matching of ``dets`` using shortest-path rows from ``table``.

    Every defect must be a source of ``table``.  Either boundary may absorb
    any number of defects.
    """
    if len(dets) == 0:
        return Matching(basis, [], 0.0, 0, table)
    rows = table.dist[[table.row[int(u)] for u in dets]]
    d0 = rows[:, table.b0]
    d1 = rows[:, table.b1]
    side = (d0 <= d1).astype(np.int64)  # 1: nearest boundary is B0
    bd = np.minimum(d0, d1)
    dm = rows[:, dets]
    via = bd[:, None] + bd[None, :]
    direct = dm <= via
    pair_w = np.where(direct, dm, via)
    mate, total = _solve(pair_w, bd)
    bd_node = np.where(side == 1, table.b0, table.b1)
    pairs, flip = _pairs_from(dets, mate, direct, side, bd_node)
    return Matching(basis, pairs, float(total), flip, table)


def mwpm_decode(graph: DecodingGraph, events) -> Matching:
    """Exact minimum-weight perfect matching of the fired detectors."""
    return match_defects(path_table(graph), defects_of(graph, events), graph.basis)


def complementary_matching(graph: DecodingGraph, events, flip: int) -> Matching:
    """Minimum-weight correction constrained to predict observable flip ``flip``.

    The class is fixed by treating ``B0`` as an ordinary terminal that must
    be met an odd number of times iff ``flip`` is 1, while ``B1`` stays free.
    Paths may touch ``B0`` twice (in and out) without changing the class.
    """
    table = path_table(graph)
    dets = defects_of(graph, events)
    b0, b1, L = table.b0, table.b1, table.logical
    terms = list(dets) + ([b0] if flip else [])
    terms = np.array(terms, dtype=np.int64)
    k = len(terms)
    if k == 0:
        return Matching(graph.basis, [], 0.0, 0, table)
    is_b0 = terms == b0
    d0 = np.where(is_b0, 0.0, table.dist[table.row[b0], terms])
    d1_direct = np.where(is_b0, L, table.dist[table.row[b1], terms])
    # Free boundary B1, reached directly or through B0 (two B0 contacts).
    via_b0 = d0 + L
    use_b0_route = via_b0 < d1_direct
    bd = np.where(use_b0_route, via_b0, d1_direct)
    dm = table.dist[[table.row[int(t)] for t in terms]][:, terms]
    through_b0 = d0[:, None] + d0[None, :]
    dm = np.minimum(dm, through_b0)
    via = bd[:, None] + bd[None, :]
    direct = dm <= via
    pair_w = np.where(direct, dm, via)
    mate, total = _solve(pair_w, bd)
    # Pairs for edge reconstruction; the class is ``flip`` by construction.
    pairs: list[tuple[int, int]] = []
    for i in range(k):
        j = int(mate[i])
        if j == k or (i < j and not direct[i, j]):
            ends = [i] if j == k else [i, j]
            for t in ends:
                a = int(terms[t])
                if a == b0:
                    pairs.append((b1, b0))
                elif use_b0_route[t]:
                    pairs.append((a, b0))
                    pairs.append((b1, b0))
                else:
                    pairs.append((a, b1))
        elif i < j:
            a, b = int(terms[i]), int(terms[j])
            if a == b0 or b == b0:
                pairs.append((b if a == b0 else a, b0))
            elif table.distance(a, b) <= through_b0[i, j]:
                pairs.append((a, b))
            else:
                pairs.append((a, b0))
                pairs.append((b, b0))
    return Matching(graph.basis, _orient(pairs, b0, b1), float(total), int(flip), table)


def _orient(pairs, b0, b1):
    # Path tables are rooted at the first element; keep boundary nodes second
    # except for the B1-B0 logical segment, which is rooted at B1.
    out = []
    for a, b in pairs:
        if a in (b0, b1) and b not in (b0, b1):
            a, b = b, a
        out.append((a, b))
    return out


def complementary_gap(graph: DecodingGraph, events, base: Matching | None = None, truth: int | None = None) -> GapResult:
    """Weight gap between the best corrections of the two logical classes.

    ``truth`` (the actual observable flip) enables the signed gap, positive
    when ``base`` predicts correctly.
    """
    if base is None:
        base = mwpm_decode(graph, events)
    comp = complementary_matching(graph, events, 1 - base.flip)
    delta = comp.weight - base.weight
    if delta < -1e-9 * max(1.0, abs(base.weight)):
        raise RuntimeError("complementary matching lighter than the base matching")
    g = DB_PER_NEPER * abs(delta)
    signed = None
    if truth is not None:
        signed = g if int(truth) == base.flip else -g
    return GapResult("complementary", g, signed, base.weight, comp.weight)


# --------------------------------------------------------------------------
# Union-Find
# --------------------------------------------------------------------------


def uf_decode(graph: DecodingGraph, events) -> tuple[Matching, ClusterSet]:
    """Weighted Union-Find decoding.

    Invalid clusters (odd defect count, no boundary) grow in lockstep along
    every boundary edge until an edge is fully covered; covered edges merge
    clusters.  A spanning forest of covered edges, rooted at boundary nodes
    where available, is then peeled leaf-first to pair the defects.
    """
    table = path_table(graph)
    dets = defects_of(graph, events)
    indptr, nbr, eid = graph.csr
    nd = graph.num_detectors
    growth, root, dual = kernels.uf_grow(indptr, nbr, eid, graph.edge_u, graph.edge_v, graph.weights, dets, nd)
    full = growth >= graph.weights
    correction, raw_pairs = kernels.uf_peel(indptr, nbr, eid, full.astype(np.uint8), root, dets, nd)
    correction = np.asarray(correction, dtype=np.int64)
    obs = np.array([e.observable for e in graph.edges], dtype=np.int64)
    flip = int(obs[correction].sum() % 2) if len(correction) else 0
    weight = float(graph.weights[correction].sum()) if len(correction) else 0.0
    pairs = [(int(a), int(b)) for a, b in raw_pairs]
    m = Matching(graph.basis, pairs, weight, flip, table, correction)
    return m, ClusterSet(np.asarray(root, dtype=np.int64), np.asarray(growth), full, dets, nd, float(dual), weight)


def cluster_gap(
    graph: DecodingGraph,
    clusters: ClusterSet,
    mode: Literal["certified", "residual", "quotient"] = "certified",
) -> GapResult:
    """Boundary-to-boundary distance once the clusters are contracted.

    Edges with both ends in one cluster cost nothing.  Other edges cost

    * ``"quotient"``: their full weight;
    * ``"residual"`` and ``"certified"``: the part not yet covered by growth.

    ``"certified"`` additionally subtracts the Union-Find duality slack
    (correction weight minus the summed growth radii), which makes the result
    a guaranteed lower bound on the complementary gap.  The growth radii form
    a feasible dual, so any correction in the class opposite to Union-Find's
    weighs at least ``dual + residual distance``; the slack covers the case
    where exact matching lands in that class.  Without it Union-Find clusters
    can report a large gap on a near-degenerate syndrome.
    """
    ru = clusters.root[graph.edge_u]
    rv = clusters.root[graph.edge_v]
    inside = (ru >= 0) & (ru == rv)
    if mode == "quotient":
        outside = graph.weights
    elif mode in ("residual", "certified"):
        outside = np.maximum(graph.weights - clusters.growth, 0.0)
    else:
        raise ValueError(f"unknown cluster gap mode {mode!r}")
    w = np.where(inside, 0.0, outside)
    indptr, nbr, eid = graph.csr
    dist, _ = kernels.dijkstra(indptr, nbr, eid, w, graph.boundary0, graph.num_detectors)
    path = float(dist[graph.boundary1])
    slack = max(0.0, clusters.correction_weight - clusters.dual)
    value = max(0.0, path - slack) if mode == "certified" else path
    return GapResult("cluster", DB_PER_NEPER * value, path_weight=path, slack=slack)
