"""Monte Carlo drivers behind the command line.

Every driver takes a validated :class:`ExperimentConfig` and returns a
:class:`ResultTable` whose body depends only on ``(config, seed)``.
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np

from .. import backlog
from ..code_model import CodeModel, DetectionEvents, NoiseParams, SurfaceCodeSpec, build_code, sample_batch
from ..strong import StrongDecoder
from ..switching import (
    NOT_EVALUATED,
    GapSpectrum,
    log_odds_slope,
    strong_decode,
    switched_error_rate,
    switching_rate,
    thresholded_error_rate,
    weak_decode,
)
from .config import ExperimentConfig
from .results import ResultTable

StrongEval = Literal["none", "all", "audit"]

_BATCH = 2048


def point_seed(seed: int, *key: int) -> int:
    """Independent 64-bit seed for one grid point."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def model_for(config: ExperimentConfig, d: int, p: float) -> tuple[CodeModel, float | None]:
    """Code model for ``(d, p)`` and the sampling-rate override (set only at ``p = 0``)."""
    if p > 0.0:
        return build_code(SurfaceCodeSpec(d, config.rounds, config.basis), NoiseParams(p)), None
    return build_code(SurfaceCodeSpec(d, config.rounds, config.basis), NoiseParams(config.p_ref)), 0.0


def binomial_sigma(k: int, n: int) -> float:
    if n == 0:
        return math.nan
    q = k / n
    return math.sqrt(q * (1.0 - q) / n)


def record_shots(
    model: CodeModel,
    shots: int,
    seed: int,
    kind: str = "complementary",
    cluster_mode: str = "certified",
    strong: StrongEval = "all",
    audit_below: float = 0.0,
    audit_fraction: float = 0.0,
    p: float | None = None,
    bin_width: float = 1.0,
) -> GapSpectrum:
    """Decode ``shots`` sampled shots and collect gaps and error flags.

    With ``strong="audit"`` the strong decoder runs on shots with
    ``g < audit_below`` and on a uniform ``audit_fraction`` subsample.
    """
    basis = model.spec.decoding_basis
    sdec = StrongDecoder(model) if strong != "none" else None
    audit = np.random.default_rng([int(seed), 0xA0D17]).random(shots) < audit_fraction
    gaps = np.empty(shots, dtype=np.float64)
    weak_err = np.empty(shots, dtype=np.int8)
    strong_err = np.full(shots, NOT_EVALUATED, dtype=np.int8)
    for start in range(0, shots, _BATCH):
        count = min(_BATCH, shots - start)
        _, parts, flips = sample_batch(model, seed, start, count, p)
        for k in range(count):
            i = start + k
            events = DetectionEvents(
                detectors={"X": parts["X"][k], "Z": parts["Z"][k]},
                observables={"X": int(flips["X"][k]), "Z": int(flips["Z"][k])},
            )
            truth = events.observables[basis]
            weak = weak_decode(model, events, kind, cluster_mode)
            gaps[i] = weak.gap
            weak_err[i] = weak.prediction != truth
            if sdec is not None and (strong == "all" or weak.gap < audit_below or audit[i]):
                strong_err[i] = strong_decode(sdec, events) != truth
    return GapSpectrum(gaps, weak_err, strong_err, bin_width)


def _strong_policy(config: ExperimentConfig, d: int) -> StrongEval:
    if config.strong_eval == "auto":
        return "all" if d <= 3 else "audit"
    return config.strong_eval  # type: ignore[return-value]


def _grid(config: ExperimentConfig):
    for di, d in enumerate(config.distances):
        for pi, p in enumerate(config.p):
            yield d, p, point_seed(config.seed, di, pi)


# --------------------------------------------------------------------------
# Decoding experiments
# --------------------------------------------------------------------------

MEMORY_COLUMNS = (
    "d", "p", "g_th_db", "shots",
    "weak_errors", "P_L_weak", "sigma_weak",
    "strong_errors", "P_L_strong", "sigma_strong",
    "switched_errors", "P_L_switch", "sigma_switch",
    "switches", "gamma_switch", "sigma_gamma",
)


def run_memory_experiment(config: ExperimentConfig) -> ResultTable:
    """Weak-only, strong-only and switched logical error rates per shot.

    The strong decoder is evaluated on every shot so the strong-only column
    is unbiased.
    """
    table = ResultTable("memory", MEMORY_COLUMNS, config)
    for d, p, seed in _grid(config):
        model, override = model_for(config, d, p)
        spec = record_shots(model, config.shots, seed, config.weak_kind, config.cluster_mode, "all", p=override,
                            bin_width=config.bin_width_db)
        n = spec.total
        weak = int(spec.weak_errors.sum())
        strong = int(spec.strong_errors.sum())
        for g_th in config.g_th_db:
            sw_err = round(switched_error_rate(spec, g_th) * n)
            switches = int(np.count_nonzero(spec.gaps < g_th))
            table.add(
                d=d, p=p, g_th_db=g_th, shots=n,
                weak_errors=weak, P_L_weak=weak / n, sigma_weak=binomial_sigma(weak, n),
                strong_errors=strong, P_L_strong=strong / n, sigma_strong=binomial_sigma(strong, n),
                switched_errors=sw_err, P_L_switch=sw_err / n, sigma_switch=binomial_sigma(sw_err, n),
                switches=switches, gamma_switch=switches / n, sigma_gamma=binomial_sigma(switches, n),
            )
    return table


THRESHOLD_COLUMNS = ("d", "p", "shots", "weak_errors", "P_L_weak", "sigma_weak", "strong_errors", "P_L_strong", "sigma_strong")


def run_threshold_curve(config: ExperimentConfig) -> ResultTable:
    """Weak and strong logical error rate over the ``(d, p)`` grid."""
    table = ResultTable("threshold_curve", THRESHOLD_COLUMNS, config)
    for d, p, seed in _grid(config):
        model, override = model_for(config, d, p)
        spec = record_shots(model, config.shots, seed, config.weak_kind, config.cluster_mode, "all", p=override)
        n = spec.total
        weak = int(spec.weak_errors.sum())
        strong = int(spec.strong_errors.sum())
        table.add(d=d, p=p, shots=n, weak_errors=weak, P_L_weak=weak / n, sigma_weak=binomial_sigma(weak, n),
                  strong_errors=strong, P_L_strong=strong / n, sigma_strong=binomial_sigma(strong, n))
    return table


GAP_COLUMNS = ("d", "p", "bin_lo_db", "bin_hi_db", "count", "correct", "wrong", "density", "P_weak_e_g")


def run_gap_histogram(config: ExperimentConfig) -> ResultTable:
    """Gap histogram split by whether the weak decoder was right."""
    table = ResultTable("gaps", GAP_COLUMNS, config)
    for d, p, seed in _grid(config):
        model, override = model_for(config, d, p)
        spec = record_shots(model, config.shots, seed, config.weak_kind, config.cluster_mode, "none", p=override,
                            bin_width=config.bin_width_db)
        counts, wrong, dens, cond = spec.counts, spec.weak_error_counts, spec.density, spec.weak_conditional
        for b in range(len(counts)):
            table.add(d=d, p=p, bin_lo_db=float(spec.edges[b]), bin_hi_db=float(spec.edges[b + 1]),
                      count=int(counts[b]), correct=int(counts[b] - wrong[b]), wrong=int(wrong[b]),
                      density=float(dens[b]), P_weak_e_g=float(cond[b]))
    return table


SPECTRUM_COLUMNS = (
    "d", "p", "bin_lo_db", "bin_hi_db", "count", "p_g", "weak_errors", "P_weak_e_g",
    "strong_evaluated", "strong_errors", "P_strong_e_g", "empty",
)


def run_spectrum(config: ExperimentConfig) -> ResultTable:
    """Binned spectrum with weak and strong conditional error rates."""
    table = ResultTable("spectrum", SPECTRUM_COLUMNS, config)
    audit_below = max(config.g_th_db) if config.g_th_db else 0.0
    for d, p, seed in _grid(config):
        model, override = model_for(config, d, p)
        spec = record_shots(model, config.shots, seed, config.weak_kind, config.cluster_mode, _strong_policy(config, d),
                            audit_below, config.audit_fraction, override, config.bin_width_db)
        for b in range(len(spec.counts)):
            table.add(d=d, p=p, bin_lo_db=float(spec.edges[b]), bin_hi_db=float(spec.edges[b + 1]),
                      count=int(spec.counts[b]), p_g=float(spec.density[b]),
                      weak_errors=int(spec.weak_error_counts[b]), P_weak_e_g=float(spec.weak_conditional[b]),
                      strong_evaluated=int(spec.strong_evaluated_counts[b]),
                      strong_errors=int(spec.strong_error_counts[b]), P_strong_e_g=float(spec.strong_conditional[b]),
                      empty=bool(spec.empty[b]))
        point = {}
        try:
            point["log_odds_slope_per_db"] = log_odds_slope(spec)
        except ValueError:
            point["log_odds_slope_per_db"] = None
        for g_th in config.g_th_db:
            point[f"g_th={g_th!r}"] = {
                "gamma_switch": switching_rate(spec, g_th),
                "P_L_th": thresholded_error_rate(spec, g_th),
            }
        table.summary[f"d={d},p={p!r}"] = point
    return table


TRADEOFF_COLUMNS = ("d", "p", "g_th_db", "gamma_switch", "P_L_th", "P_L_switch", "sigma_switch", "optimal")


def threshold_grid(config: ExperimentConfig) -> np.ndarray:
    n = int(math.floor(config.gth_max_db / config.gth_step_db + 1e-9))
    return config.gth_step_db * np.arange(n + 1)


def run_tradeoff_scan(config: ExperimentConfig) -> ResultTable:
    """Switching rate against switched error rate over a threshold sweep.

    ``optimal`` marks the first threshold whose switched error rate is
    within 1% of its value at the largest threshold.
    """
    table = ResultTable("tradeoff", TRADEOFF_COLUMNS, config)
    grid = threshold_grid(config)
    optimal_points: dict[float, list[tuple[int, float, float]]] = {}
    for d, p, seed in _grid(config):
        model, override = model_for(config, d, p)
        spec = record_shots(model, config.shots, seed, config.weak_kind, config.cluster_mode, _strong_policy(config, d),
                            float(grid[-1]), config.audit_fraction, override, config.bin_width_db)
        n = spec.total
        rates = [switched_error_rate(spec, float(g)) for g in grid]
        asym = rates[-1]
        opt = next(k for k, r in enumerate(rates) if abs(r - asym) <= 0.01 * asym)
        for k, g in enumerate(grid):
            table.add(d=d, p=p, g_th_db=float(g), gamma_switch=switching_rate(spec, float(g)),
                      P_L_th=thresholded_error_rate(spec, float(g)), P_L_switch=rates[k],
                      sigma_switch=binomial_sigma(round(rates[k] * n), n), optimal=k == opt)
        optimal_points.setdefault(p, []).append((d, switching_rate(spec, float(grid[opt])), rates[opt]))
    fits = {}
    for p, pts in optimal_points.items():
        usable = [(g, r) for _, g, r in pts if g > 0 and r > 0]
        if len({d for d, _, _ in pts}) >= 3 and len(usable) >= 3:
            x = np.log([g for g, _ in usable])
            y = np.log([r for _, r in usable])
            slope, intercept = np.polyfit(x, y, 1)
            fits[repr(p)] = {"coefficient": float(np.exp(intercept)), "exponent": float(slope)}
    table.summary["fit_P_L_vs_gamma"] = fits
    table.summary["optimal_points"] = {repr(p): pts for p, pts in optimal_points.items()}
    return table


# --------------------------------------------------------------------------
# Scheduler experiments
# --------------------------------------------------------------------------

BACKLOG_COLUMNS = (
    "scheme", "f_weak", "gamma", "gamma_over_bound", "ensemble", "diverged", "divergence_probability",
    "mean_backlog", "r_com", "gamma_bound_exact", "gamma_bound_closed",
)


def _bounds(config: ExperimentConfig, f: float) -> backlog.TheoremBounds | None:
    if f >= 1.0:
        return None
    return backlog.theorem1_bounds(config.scheduler(f, "double", 0.0))


def _commit(params: backlog.SchedulerParams) -> int | None:
    if params.scheme == "sliding":
        return backlog.sliding_commit_size(params)
    if params.scheme == "double":
        return backlog.double_commit_size(params)
    return None


def backlog_gammas(config: ExperimentConfig, f: float) -> list[float]:
    """Absolute ``gammas`` plus ``gamma_factors`` times the closed-form bound, ascending."""
    out = set(config.gammas)
    b = _bounds(config, f)
    if b is not None and math.isfinite(b.gamma_closed):
        out.update(x * b.gamma_closed for x in config.gamma_factors)
    return sorted(out)


def run_backlog_suite(config: ExperimentConfig) -> ResultTable:
    """Divergence probability and mean backlog per scheme, ``f_weak`` and ``gamma``.

    All schemes share the trajectory streams of ``config.seed``, so their
    ensembles are paired.
    """
    table = ResultTable("backlog", BACKLOG_COLUMNS, config)
    for scheme in config.schemes:
        for f in config.f_weak:
            b = _bounds(config, f)
            for gamma in backlog_gammas(config, f):
                params = config.scheduler(f, scheme, gamma)
                rep = backlog.divergence_report(params, config.ensemble, config.seed)
                table.add(
                    scheme=scheme, f_weak=f, gamma=gamma,
                    gamma_over_bound=gamma / b.gamma_closed if b and b.gamma_closed > 0 else None,
                    ensemble=rep.ensemble_size, diverged=rep.diverged, divergence_probability=rep.probability,
                    mean_backlog=rep.mean_backlog, r_com=_commit(params),
                    gamma_bound_exact=b.gamma_exact if b else None, gamma_bound_closed=b.gamma_closed if b else None,
                )
    if "double" in config.schemes:
        table.summary["gamma_bound_closed"] = {repr(f): _bounds(config, f).gamma_closed for f in config.f_weak if f < 1}
    return table


def sample_trajectories(config: ExperimentConfig) -> ResultTable:
    """The first ``trajectory_samples`` trajectories of every backlog grid point."""
    table = ResultTable("trajectories", ("scheme", "f_weak", "gamma", "traj", "i", "r", "switched"), config)
    for scheme in config.schemes:
        for f in config.f_weak:
            for gamma in backlog_gammas(config, f):
                params = config.scheduler(f, scheme, gamma)
                for t in range(config.trajectory_samples):
                    tr = backlog.simulate(params, config.seed, t)
                    switched = np.zeros(len(tr.r), dtype=bool)
                    switched[tr.switches] = True
                    for i, r in enumerate(tr.r):
                        table.add(scheme=scheme, f_weak=f, gamma=gamma, traj=t, i=i, r=float(r), switched=bool(switched[i]))
    return table


BOUNDS_COLUMNS = ("f_weak", "f_strong", "alpha", "r_buf", "d", "r_com_min", "gamma_exact", "gamma_closed", "tighter")


def run_bounds(config: ExperimentConfig) -> ResultTable:
    """Minimum commit size and switching-rate bounds for each ``f_weak``."""
    table = ResultTable("bounds", BOUNDS_COLUMNS, config)
    for f in config.f_weak:
        params = config.scheduler(f, "double", 0.0)
        b = _bounds(config, f)
        table.add(
            f_weak=f, f_strong=params.f_strong, alpha=params.alpha, r_buf=params.r_buf, d=params.d,
            r_com_min=b.r_com if b else None, gamma_exact=b.gamma_exact if b else None,
            gamma_closed=b.gamma_closed if b else None, tighter=b.tighter if b else "none",
        )
    return table


RUNNERS = {
    "memory": run_memory_experiment,
    "threshold-curve": run_threshold_curve,
    "gap-histogram": run_gap_histogram,
    "spectrum": run_spectrum,
    "tradeoff": run_tradeoff_scan,
    "backlog": run_backlog_suite,
    "bounds": run_bounds,
}


def run_experiment(config: ExperimentConfig) -> ResultTable:
    return RUNNERS[config.validate().experiment](config)
