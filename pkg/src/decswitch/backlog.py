"""Syndrome-backlog dynamics under online decoding with decoder switching.

All times are in units of the syndrome generation time, so a duration of
one equals one round.  Three schedules are modelled:

``naive``
    Each gate interval decodes, in one batch, the rounds that accumulated
    during the previous interval.  A switched interval runs at the strong
    decoder's rate.
``sliding``
    One decoder works through overlapping windows (commit ``r_com`` rounds,
    buffer ``r_buf``).  A switched window is re-decoded by the strong decoder
    while new rounds pile up.
``double``
    The weak decoder always keeps pace on the newest rounds.  Switched windows
    (plus ``alpha * r_buf`` rounds of boundary context) go to a separate
    strong queue.  The gate-boundary backlog counts the weak pipeline depth,
    the communication terms and the time left to drain the strong queue.

Backlog ``r_i`` is the number of rounds between logical measurements ``i``
and ``i + 1``: the wait for the decoder plus ``r_op`` rounds of the next
operation.  A trajectory diverges when some ``r_i`` exceeds ``cap``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Literal

import numpy as np

from . import kernels

Scheme = Literal["naive", "sliding", "double"]
SCHEMES: tuple[str, ...] = ("naive", "sliding", "double")

#: Commit-size margin of the sliding-window scheme: the weak decoder may use
#: at most this fraction of the generation rate.
SLIDING_MARGIN = 0.95


@dataclass(frozen=True)
class SchedulerParams:
    """Decoder timing, code size and switching rate for backlog simulation.

    ``tau_*`` and ``t_comm_*`` share one time unit; only ratios to
    ``tau_gen`` matter.  ``r_op`` defaults to ``9 * d`` and ``r_buf`` to
    ``d``.
    """

    tau_gen: float = 1.0
    tau_dec_weak: float = 0.7
    tau_dec_strong: float = 10.0
    t_comm_weak: float = 1.0
    t_comm_strong: float = 10.0
    d: int = 21
    r_op: float | None = None
    n_gate: int = 10_000
    gamma: float = 0.0
    scheme: Scheme = "double"
    r_buf: float | None = None
    alpha: float = 2.0
    cap: float = 1e6
    r_0: float | None = None

    def __post_init__(self) -> None:
        if not self.tau_gen > 0:
            raise ValueError("tau_gen must be positive")
        for name in ("tau_dec_weak", "tau_dec_strong", "t_comm_weak", "t_comm_strong", "alpha"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.d < 1:
            raise ValueError("d must be positive")
        if self.n_gate < 0:
            raise ValueError("n_gate must be non-negative")
        if not 0.0 <= self.gamma:
            raise ValueError("gamma must be non-negative")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.cap <= 0:
            raise ValueError("cap must be positive")
        if self.r_op is None:
            object.__setattr__(self, "r_op", 9.0 * self.d)
        if self.r_buf is None:
            object.__setattr__(self, "r_buf", float(self.d))
        if self.r_op < 0 or self.r_buf < 0:
            raise ValueError("r_op and r_buf must be non-negative")

    @property
    def f_weak(self) -> float:
        return self.tau_dec_weak / self.tau_gen

    @property
    def f_strong(self) -> float:
        return self.tau_dec_strong / self.tau_gen

    @property
    def comm_weak(self) -> float:
        """Weak communication latency in rounds."""
        return self.t_comm_weak / self.tau_gen

    @property
    def comm_strong(self) -> float:
        return self.t_comm_strong / self.tau_gen

    @property
    def delta_tau_dec(self) -> float:
        return self.tau_dec_strong - self.tau_dec_weak

    @property
    def delta_t_comm(self) -> float:
        return self.t_comm_strong - self.t_comm_weak

    @property
    def initial_backlog(self) -> float:
        return float(self.r_op if self.r_0 is None else self.r_0)

    def replace(self, **changes) -> SchedulerParams:
        values = asdict(self)
        values.update(changes)
        return SchedulerParams(**values)


@dataclass
class Trajectory:
    r: np.ndarray
    switches: np.ndarray
    diverged: bool
    r_op: float

    @property
    def steps(self) -> int:
        return len(self.r) - 1

    @property
    def mean_backlog(self) -> float:
        """Average of ``r_1 ..`` over the steps before divergence."""
        body = self.r[1:]
        if self.diverged:
            body = body[:-1]
        return float(body.mean()) if len(body) else float("nan")


@dataclass
class DivergenceReport:
    ensemble_size: int
    diverged: int
    mean_backlog: float
    params: SchedulerParams
    extra: dict = field(default_factory=dict)

    @property
    def probability(self) -> float:
        return self.diverged / self.ensemble_size if self.ensemble_size else 0.0


# --------------------------------------------------------------------------
# Analytic pieces
# --------------------------------------------------------------------------


def closed_form_backlog(f: float, t_comm_over_tau_gen: float, r_op: float, r_0: float, i) -> np.ndarray | float:
    """Backlog after ``i`` weak-only intervals of the naive schedule.

    ``r_i = f**i r_0 + (1 - f**i) / (1 - f) * (r_op + c)`` with ``c`` the
    communication latency in rounds; ``f == 1`` gives linear growth and
    ``i = inf`` the fixed point for ``f < 1``.
    """
    c = r_op + t_comm_over_tau_gen
    i_arr = np.asarray(i, dtype=np.float64)
    if f == 1.0:
        out = r_0 + i_arr * c
    elif np.all(np.isinf(i_arr)):
        if f > 1.0:
            out = np.full_like(i_arr, math.inf)
        else:
            out = np.full_like(i_arr, c / (1.0 - f))
    else:
        fi = np.power(f, i_arr)
        out = fi * r_0 + (1.0 - fi) / (1.0 - f) * c
    return float(out) if np.ndim(out) == 0 else out


def steady_backlog(f: float, t_comm_over_tau_gen: float, r_op: float) -> float:
    """Fixed point ``(r_op + c) / (1 - f)`` of the weak-only recursion (``f < 1``)."""
    if f >= 1.0:
        return math.inf
    return (r_op + t_comm_over_tau_gen) / (1.0 - f)


def sliding_commit_size(params: SchedulerParams) -> int:
    """Commit rounds per sliding window, ``max(d, ceil(f / (0.95 - f) * r_buf))``."""
    f = params.f_weak
    if f >= SLIDING_MARGIN:
        raise ValueError(f"sliding windows need tau_dec_weak < {SLIDING_MARGIN} tau_gen (got f = {f})")
    return max(int(params.d), math.ceil(f / (SLIDING_MARGIN - f) * params.r_buf - 1e-9))


def min_commit_size(f_weak: float, r_buf: float) -> int:
    """Smallest commit size that lets the weak decoder keep pace, ``ceil(f / (1 - f) * r_buf)``."""
    if f_weak >= 1.0:
        raise ValueError("the weak decoder must be faster than syndrome generation (f_weak < 1)")
    return math.ceil(f_weak / (1.0 - f_weak) * r_buf - 1e-9)


def double_commit_size(params: SchedulerParams) -> int:
    """Commit size used by the double-window simulator (at least one round)."""
    return max(1, min_commit_size(params.f_weak, params.r_buf))


@dataclass(frozen=True)
class TheoremBounds:
    """Sufficient conditions for a bounded double-window backlog."""

    r_com: int
    gamma_exact: float
    gamma_closed: float

    @property
    def tighter(self) -> Literal["exact", "closed"]:
        return "exact" if self.gamma_exact <= self.gamma_closed else "closed"

    @property
    def gamma_max(self) -> float:
        return min(self.gamma_exact, self.gamma_closed)


def theorem1_bounds(params: SchedulerParams) -> TheoremBounds:
    """Minimum commit size and maximum switching rate of the double window.

    ``gamma_exact = d / (r_strong f_strong)`` with ``r_strong = r_com + alpha r_buf``
    at the minimum commit size.  ``gamma_closed`` is the ceiling-free form
    ``(1 - f) / (alpha + (1 - alpha) f) / f_strong`` obtained with
    ``r_buf = d``.  With ``f_weak = 0`` the commit size is floored at ``r_buf``.
    """
    f = params.f_weak
    if f >= 1.0:
        raise ValueError("no bound exists for f_weak >= 1: the weak decoder cannot keep pace")
    r_com = min_commit_size(f, params.r_buf)
    if r_com == 0:
        r_com_eff = params.r_buf
    else:
        r_com_eff = r_com
    fs = params.f_strong
    r_strong = r_com_eff + params.alpha * params.r_buf
    gamma_exact = params.d / (r_strong * fs) if fs > 0 else math.inf
    denom = params.alpha + (1.0 - params.alpha) * f
    gamma_closed = (1.0 - f) / denom / fs if fs > 0 and denom > 0 else math.inf
    return TheoremBounds(r_com, gamma_exact, gamma_closed)


# --------------------------------------------------------------------------
# Simulation
# --------------------------------------------------------------------------


def _run(params: SchedulerParams, seed: int, traj: int, record: bool, force: int = 0):
    p = params
    r0 = p.initial_backlog
    if p.scheme == "naive":
        return kernels.naive_run(
            p.f_weak, p.f_strong, p.comm_weak, p.comm_strong, float(p.r_op), float(p.d), p.gamma,
            r0, int(p.n_gate), p.cap, int(seed), int(traj), record, int(force),
        )
    if p.scheme == "sliding":
        r_com = sliding_commit_size(p)
        return kernels.sliding_run(
            p.f_weak, p.f_strong, p.comm_weak, p.comm_strong, float(p.r_op), float(p.d), p.gamma,
            float(r_com), float(p.r_buf), r0, int(p.n_gate), p.cap, int(seed), int(traj), record, int(force),
        )
    r_com = double_commit_size(p)
    return kernels.double_run(
        p.comm_weak, p.comm_strong, p.f_strong, float(p.r_op), float(p.d), p.gamma, float(r_com),
        float(p.r_buf), float(p.alpha), r0, int(p.n_gate), p.cap, int(seed), int(traj), record, int(force),
    )


def simulate(params: SchedulerParams, seed: int, traj: int = 0, force_switches: int = 0) -> Trajectory:
    """One backlog trajectory; ``(params, seed, traj)`` fixes it completely.

    ``force_switches`` makes the first that many switch decisions (intervals
    or windows, depending on the scheme) switch unconditionally.
    """
    r, sw, diverged, _, _ = _run(params, seed, traj, True, force_switches)
    return Trajectory(r, sw, bool(diverged), float(params.r_op))


def simulate_naive(params: SchedulerParams, seed: int, traj: int = 0) -> Trajectory:
    return simulate(params.replace(scheme="naive"), seed, traj)


def simulate_sliding(params: SchedulerParams, seed: int, traj: int = 0) -> Trajectory:
    return simulate(params.replace(scheme="sliding"), seed, traj)


def simulate_double_window(params: SchedulerParams, seed: int, traj: int = 0) -> Trajectory:
    p = params.replace(scheme="double")
    if p.f_weak >= 1.0:
        raise ValueError("double window needs tau_dec_weak < tau_gen")
    return simulate(p, seed, traj)


def divergence_report(params: SchedulerParams, ensemble_size: int, seed: int) -> DivergenceReport:
    """Run ``ensemble_size`` independent trajectories (stream ``k`` for trajectory ``k``)."""
    if params.scheme == "double" and params.f_weak >= 1.0:
        raise ValueError("double window needs tau_dec_weak < tau_gen")
    diverged = 0
    steps = 0
    total = 0.0
    for k in range(ensemble_size):
        _, _, div, n, s = _run(params, seed, k, False)
        if div:
            diverged += 1
        else:
            steps += n
            total += s
    mean = total / steps if steps else float("nan")
    return DivergenceReport(ensemble_size, diverged, mean, params)


def max_stable_gamma(
    params: SchedulerParams, gammas, ensemble_size: int, seed: int
) -> tuple[float, list[DivergenceReport]]:
    """Largest ``gamma`` of an ascending grid before the first non-zero divergence.

    Returns ``(gamma, reports)``; ``gamma`` is 0 when the first grid point
    already diverges.
    """
    best = 0.0
    reports = []
    for g in sorted(gammas):
        rep = divergence_report(params.replace(gamma=float(g)), ensemble_size, seed)
        reports.append(rep)
        if rep.diverged:
            break
        best = float(g)
    return best, reports
