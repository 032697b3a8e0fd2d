"""Rotated surface code matching graphs under phenomenological depolarizing noise.

Layout
------
Data qubits sit on a ``d x d`` grid ``(row, col)``.  Stabilizer plaquettes are
indexed by the grid corners ``(i, j)`` with ``0 <= i, j <= d`` and cover the up
to four data qubits around the corner.  Corner ``(i, j)`` is X-type when
``i + j`` is even and Z-type otherwise.  Weight-2 plaquettes are kept on the
top/bottom edges when Z-type and on the left/right edges when X-type.

With this choice X errors (seen by Z checks) form strings running left to
right, so the X graph has its two boundary super-nodes on the left (``B0``)
and right (``B1``).  The X-graph observable is the ``Z_L`` representative on
column 0, which is flipped exactly by the edges incident to ``B0``.  The Z
graph is the transpose: boundaries top (``B0``) and bottom (``B1``), observable
``X_L`` on row 0.

Time
----
``rounds`` syndrome rounds are measured; data errors strike before every
round and every non-terminal round's measurements may flip.  The last round
is perfect, so detector ``(s, t)`` is ``m(s, t) xor m(s, t - 1)`` with
``m(s, -1) = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.sparse as sp

Basis = Literal["X", "Z"]

#: Mechanism kinds, in check-matrix column order within a round.
KIND_X, KIND_Y, KIND_Z, KIND_MEAS = 0, 1, 2, 3


def edge_weight(p: float) -> float:
    """Log-likelihood weight ``ln((1 - p) / p)`` of an edge with flip probability ``p``."""
    return math.log((1.0 - p) / p)


def merge_probability(p1: float, p2: float) -> float:
    """Probability that exactly one of two independent mechanisms fires."""
    return p1 * (1.0 - p2) + p2 * (1.0 - p1)


@dataclass(frozen=True)
class SurfaceCodeSpec:
    distance: int
    rounds: int | None = None
    basis: Basis = "Z"

    def __post_init__(self) -> None:
        d = self.distance
        if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
            raise ValueError(f"distance must be an odd integer >= 3, got {d!r}")
        if self.rounds is None:
            object.__setattr__(self, "rounds", int(d))
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.basis not in ("X", "Z"):
            raise ValueError(f"basis must be 'X' or 'Z', got {self.basis!r}")

    @property
    def decoding_basis(self) -> Basis:
        """Graph whose observable is the memory experiment's logical readout.

        A Z-basis memory reads out ``Z_L``, which X errors flip, so it is decoded
        on the X graph (and vice versa).
        """
        return "X" if self.basis == "Z" else "Z"


@dataclass(frozen=True)
class NoiseParams:
    p: float
    model: Literal["phenomenological-depolarizing"] = "phenomenological-depolarizing"

    def __post_init__(self) -> None:
        if not (0.0 < self.p < 0.5):
            raise ValueError(f"physical error rate must lie in (0, 0.5), got {self.p!r}")
        if self.model != "phenomenological-depolarizing":
            raise ValueError(f"unknown noise model {self.model!r}")


@dataclass
class Edge:
    u: int
    v: int
    probability: float
    weight: float
    observable: bool
    mechanisms: tuple[int, ...]
    #: Y-mechanism ids on this edge; the same id labels the partner edge in the other graph.
    correlation_tags: tuple[int, ...] = ()


@dataclass
class DecodingGraph:
    """Weighted detector graph for one basis.

    Nodes ``0 .. num_detectors - 1`` are detectors, ``num_detectors`` is the
    boundary ``B0`` whose incident edges flip the observable, and
    ``num_detectors + 1`` is the inequivalent boundary ``B1``.
    """

    basis: Basis
    distance: int
    rounds: int
    num_checks: int
    edges: list[Edge]

    @property
    def num_detectors(self) -> int:
        return self.num_checks * self.rounds

    @property
    def boundary0(self) -> int:
        return self.num_detectors

    @property
    def boundary1(self) -> int:
        return self.num_detectors + 1

    @property
    def num_nodes(self) -> int:
        return self.num_detectors + 2

    def detector(self, check: int, round_: int) -> int:
        return round_ * self.num_checks + check

    @cached_property
    def edge_u(self) -> np.ndarray:
        return np.array([e.u for e in self.edges], dtype=np.int64)

    @cached_property
    def edge_v(self) -> np.ndarray:
        return np.array([e.v for e in self.edges], dtype=np.int64)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.edges], dtype=np.float64)

    @cached_property
    def probabilities(self) -> np.ndarray:
        return np.array([e.probability for e in self.edges], dtype=np.float64)

    @cached_property
    def csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Adjacency as ``(indptr, neighbour, edge_index)`` arrays."""
        n = self.num_nodes
        ends = np.concatenate([self.edge_u, self.edge_v])
        other = np.concatenate([self.edge_v, self.edge_u])
        eid = np.concatenate([np.arange(len(self.edges))] * 2)
        order = np.lexsort((other, ends))
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(indptr, ends + 1, 1)
        np.cumsum(indptr, out=indptr)
        return indptr, other[order].astype(np.int64), eid[order].astype(np.int64)

    def with_probabilities(self, probabilities) -> DecodingGraph:
        """Copy of the graph with new per-edge probabilities (weights recomputed)."""
        probs = np.asarray(probabilities, dtype=np.float64)
        if probs.shape == ():
            probs = np.full(len(self.edges), float(probs))
        if probs.shape != (len(self.edges),):
            raise ValueError("one probability per edge required")
        if np.any(probs <= 0.0) or np.any(probs >= 0.5):
            raise ValueError("edge probabilities must lie in (0, 0.5)")
        edges = [
            Edge(e.u, e.v, float(q), edge_weight(float(q)), e.observable, e.mechanisms, e.correlation_tags)
            for e, q in zip(self.edges, probs)
        ]
        return DecodingGraph(self.basis, self.distance, self.rounds, self.num_checks, edges)

    def with_uniform_probability(self, p: float) -> DecodingGraph:
        """Every edge set to probability ``p`` (the textbook uniform-weight graph)."""
        return self.with_probabilities(p)


@dataclass
class CheckMatrix:
    """Mechanism-to-detector incidence over both bases.

    Rows ``0 .. nx - 1`` are X-graph detectors, rows ``nx .. nx + nz - 1`` are
    Z-graph detectors.  Column ``m`` is error mechanism ``m``.
    """

    matrix: sp.csc_matrix
    observables: np.ndarray  # shape (2, num_mechanisms): row 0 = X-graph obs, row 1 = Z-graph obs
    priors: np.ndarray
    kinds: np.ndarray
    locations: np.ndarray  # (qubit or check, round) per mechanism
    num_x_detectors: int
    num_z_detectors: int

    @property
    def num_mechanisms(self) -> int:
        return self.matrix.shape[1]

    @property
    def num_detectors(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def mechanism_detectors(self) -> list[np.ndarray]:
        m = self.matrix
        return [m.indices[m.indptr[k]:m.indptr[k + 1]] for k in range(m.shape[1])]

    def syndrome(self, errors: np.ndarray) -> np.ndarray:
        """GF(2) product ``H @ errors`` for one error vector or a batch of rows."""
        e = np.asarray(errors, dtype=np.uint8)
        if e.ndim == 1:
            return (self.matrix @ e.astype(np.int64) % 2).astype(np.uint8)
        return (self.matrix @ e.T.astype(np.int64) % 2).T.astype(np.uint8)

    def observable_flips(self, errors: np.ndarray) -> np.ndarray:
        e = np.asarray(errors, dtype=np.int64)
        return ((e @ self.observables.T.astype(np.int64)) % 2).astype(np.uint8)

    def split(self, syndrome: np.ndarray) -> dict[str, np.ndarray]:
        nx = self.num_x_detectors
        return {"X": syndrome[..., :nx], "Z": syndrome[..., nx:]}


@dataclass
class CodeModel:
    spec: SurfaceCodeSpec
    noise: NoiseParams
    graphs: dict[str, DecodingGraph]
    check_matrix: CheckMatrix
    qubits: list[tuple[int, int]] = field(repr=False)
    x_checks: list[tuple[tuple[int, int], tuple[int, ...]]] = field(repr=False)
    z_checks: list[tuple[tuple[int, int], tuple[int, ...]]] = field(repr=False)


@dataclass
class ErrorSample:
    errors: np.ndarray  # uint8 per mechanism
    seed: int
    index: int


@dataclass
class DetectionEvents:
    detectors: dict[str, np.ndarray]  # uint8 per detector, per basis
    observables: dict[str, int]       # true observable flip per basis

    def defects(self, basis: str) -> np.ndarray:
        return np.flatnonzero(self.detectors[basis])


def _layout(d: int):
    qubits = [(r, c) for r in range(d) for c in range(d)]
    qindex = {q: k for k, q in enumerate(qubits)}
    x_checks, z_checks = [], []
    for i in range(d + 1):
        for j in range(d + 1):
            support = tuple(
                qindex[(r, c)]
                for r, c in ((i - 1, j - 1), (i - 1, j), (i, j - 1), (i, j))
                if 0 <= r < d and 0 <= c < d
            )
            is_x = (i + j) % 2 == 0
            if len(support) == 4:
                pass
            elif len(support) == 2:
                on_top_bottom = i in (0, d)
                if on_top_bottom and is_x:
                    continue
                if not on_top_bottom and not is_x:
                    continue
            else:
                continue
            (x_checks if is_x else z_checks).append(((i, j), support))
    return qubits, x_checks, z_checks


def _check_incidence(num_qubits: int, checks) -> list[list[int]]:
    inc: list[list[int]] = [[] for _ in range(num_qubits)]
    for s, (_, support) in enumerate(checks):
        for q in support:
            inc[q].append(s)
    return inc


def build_code(spec: SurfaceCodeSpec, noise: NoiseParams) -> CodeModel:
    """Build both matching graphs and the joint check matrix."""
    d, r, p = spec.distance, spec.rounds, noise.p
    qubits, x_checks, z_checks = _layout(d)
    nq = len(qubits)
    z_of_qubit = _check_incidence(nq, z_checks)  # detectors hit by X errors
    x_of_qubit = _check_incidence(nq, x_checks)  # detectors hit by Z errors
    nzc, nxc = len(z_checks), len(x_checks)
    # X graph is built from Z checks and vice versa.
    nx_det, nz_det = nzc * r, nxc * r

    def side(q: int, basis: str) -> int:
        row, col = qubits[q]
        coord = col if basis == "X" else row
        if coord == 0:
            return 0
        if coord == d - 1:
            return 1
        raise AssertionError("boundary qubit away from the boundary column/row")

    rows, cols, kinds, locs, priors = [], [], [], [], []
    obs = [[], []]
    # Per-basis graph contributions: (u, v, mechanism, observable, y_tag)
    contrib: dict[str, list[tuple[int, int, int, bool, int | None]]] = {"X": [], "Z": []}

    def graph_endpoints(basis: str, q: int, t: int) -> tuple[int, int]:
        checks = z_of_qubit[q] if basis == "X" else x_of_qubit[q]
        nchk = nzc if basis == "X" else nxc
        dets = [t * nchk + s for s in checks]
        if len(dets) == 2:
            return min(dets), max(dets)
        assert len(dets) == 1
        return dets[0], (nx_det if basis == "X" else nz_det) + side(q, basis)

    m = 0
    for t in range(r):
        for q in range(nq):
            row, col = qubits[q]
            for kind in (KIND_X, KIND_Y, KIND_Z):
                flips_x = kind in (KIND_X, KIND_Y)  # anticommutes with Z checks
                flips_z = kind in (KIND_Z, KIND_Y)
                dets = []
                ox = oz = 0
                if flips_x:
                    dets += [t * nzc + s for s in z_of_qubit[q]]
                    ox = int(col == 0)
                    u, v = graph_endpoints("X", q, t)
                    contrib["X"].append((u, v, m, bool(ox), m if kind == KIND_Y else None))
                if flips_z:
                    dets += [nx_det + t * nxc + s for s in x_of_qubit[q]]
                    oz = int(row == 0)
                    u, v = graph_endpoints("Z", q, t)
                    contrib["Z"].append((u, v, m, bool(oz), m if kind == KIND_Y else None))
                for det in dets:
                    rows.append(det)
                    cols.append(m)
                kinds.append(kind)
                locs.append((q, t))
                priors.append(p / 3.0)
                obs[0].append(ox)
                obs[1].append(oz)
                m += 1
        if t < r - 1:
            for basis, nchk, offset in (("X", nzc, 0), ("Z", nxc, nx_det)):
                for s in range(nchk):
                    a, b = t * nchk + s, (t + 1) * nchk + s
                    rows += [offset + a, offset + b]
                    cols += [m, m]
                    contrib[basis].append((a, b, m, False, None))
                    kinds.append(KIND_MEAS)
                    # Check ids of the Z graph are offset so both bases share one location space.
                    locs.append((s if basis == "X" else nzc + s, t))
                    priors.append(p)
                    obs[0].append(0)
                    obs[1].append(0)
                    m += 1

    nmech = m
    data = np.ones(len(rows), dtype=np.int64)
    H = sp.csc_matrix((data, (rows, cols)), shape=(nx_det + nz_det, nmech))
    H.sort_indices()
    priors_arr = np.array(priors, dtype=np.float64)

    graphs = {}
    for basis, nchk in (("X", nzc), ("Z", nxc)):
        merged: dict[tuple[int, int], list] = {}
        for u, v, mech, o, tag in contrib[basis]:
            key = (u, v)
            if key not in merged:
                merged[key] = [0.0, o, [], []]
            slot = merged[key]
            if slot[1] != o:
                raise AssertionError("parallel mechanisms disagree on the observable")
            slot[0] = merge_probability(slot[0], priors_arr[mech])
            slot[2].append(mech)
            if tag is not None:
                slot[3].append(tag)
        edges = [
            Edge(u, v, pe, edge_weight(pe), o, tuple(mechs), tuple(tags))
            for (u, v), (pe, o, mechs, tags) in sorted(merged.items())
        ]
        graphs[basis] = DecodingGraph(basis, d, r, nchk, edges)

    cm = CheckMatrix(
        matrix=H,
        observables=np.array(obs, dtype=np.uint8),
        priors=priors_arr,
        kinds=np.array(kinds, dtype=np.int8),
        locations=np.array(locs, dtype=np.int64),
        num_x_detectors=nx_det,
        num_z_detectors=nz_det,
    )
    return CodeModel(spec, noise, graphs, cm, qubits, x_checks, z_checks)


def build_graphs(spec: SurfaceCodeSpec, noise: NoiseParams):
    """Return ``(X graph, Z graph, check matrix)``."""
    model = build_code(spec, noise)
    return model.graphs["X"], model.graphs["Z"], model.check_matrix


def _generator(seed: int, index: int) -> np.random.Generator:
    # Philox is counter based: the shot index lives in the upper key word so
    # every shot owns an independent, order-free stream.
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.random.Generator(np.random.Philox(key=seed | (int(index) << 64)))


def mechanism_priors(model: CodeModel, p: float | None = None) -> np.ndarray:
    """Mechanism probabilities, optionally re-evaluated at physical rate ``p``.

    ``p`` may be 0 (noiseless sampling); the decoding graphs keep the weights
    they were built with.
    """
    cm = model.check_matrix
    if p is None:
        return cm.priors
    if not 0.0 <= p < 0.5:
        raise ValueError("sampling rate must lie in [0, 0.5)")
    return np.where(cm.kinds == KIND_MEAS, p, p / 3.0)


def sample_errors(model: CodeModel, seed: int, index: int = 0, p: float | None = None) -> ErrorSample:
    priors = mechanism_priors(model, p)
    u = _generator(seed, index).random(len(priors))
    return ErrorSample((u < priors).astype(np.uint8), int(seed), int(index))


def detection_events(model: CodeModel, errors: np.ndarray) -> DetectionEvents:
    cm = model.check_matrix
    syn = cm.syndrome(errors)
    parts = cm.split(syn)
    flips = cm.observable_flips(errors)
    return DetectionEvents(
        detectors={"X": parts["X"], "Z": parts["Z"]},
        observables={"X": int(flips[0]), "Z": int(flips[1])},
    )


def sample_shot(
    model: CodeModel, seed: int, index: int = 0, p: float | None = None
) -> tuple[ErrorSample, DetectionEvents]:
    """Draw one shot; identical ``(model, seed, index)`` give identical output."""
    sample = sample_errors(model, seed, index, p)
    return sample, detection_events(model, sample.errors)


def sample_batch(model: CodeModel, seed: int, start: int, count: int, p: float | None = None):
    """Errors, per-basis detector arrays and observable flips for shots ``start .. start + count``.

    Row ``k`` equals ``sample_shot(model, seed, start + k)``.
    """
    cm = model.check_matrix
    priors = mechanism_priors(model, p)
    errors = np.empty((count, cm.num_mechanisms), dtype=np.uint8)
    for k in range(count):
        errors[k] = _generator(seed, start + k).random(cm.num_mechanisms) < priors
    syn = cm.syndrome(errors)
    flips = cm.observable_flips(errors)
    parts = cm.split(syn)
    return errors, parts, {"X": flips[:, 0], "Z": flips[:, 1]}
