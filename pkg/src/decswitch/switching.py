"""Decoder switching and gap-spectrum statistics.

A shot is first decoded by the weak decoder, which also reports a gap ``g``
in dB.  When ``g < g_th`` the weak answer is discarded and the strong
decoder's answer is used instead; a tie keeps the weak answer.

:class:`GapSpectrum` keeps the per-shot gaps and error flags so every
threshold-dependent quantity below is an exact count, while the 1 dB bins
serve the conditional-rate views.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .code_model import CodeModel, DetectionEvents
from .strong import StrongDecoder
from .weak import cluster_gap, complementary_gap, mwpm_decode, uf_decode

GapKind = Literal["complementary", "cluster"]

#: Marks a shot whose strong prediction was never computed.
NOT_EVALUATED = -1


class ThresholdUnreachable(ValueError):
    """No threshold on the observed grid meets the accuracy target."""


@dataclass(frozen=True)
class SwitchPolicy:
    """When to hand a shot to the strong decoder.

    ``g_th`` may be ``math.inf`` to always switch.  ``parallel_launch`` starts
    the strong decoder alongside the weak one and drops its result on an
    early exit; the default launches it only when needed.
    """

    kind: GapKind = "complementary"
    g_th: float = 10.0
    parallel_launch: bool = False
    epsilon: float = 0.1
    cluster_mode: str = "certified"

    def __post_init__(self) -> None:
        if self.kind not in ("complementary", "cluster"):
            raise ValueError(f"unknown soft-output kind {self.kind!r}")
        if not self.g_th >= 0.0:
            raise ValueError(f"g_th must be >= 0 dB, got {self.g_th!r}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon!r}")

    def switches(self, g: float) -> bool:
        return g < self.g_th


@dataclass
class SwitchOutcome:
    """Result of one switched decode.  Predictions are observable flips."""

    used: Literal["weak", "strong"]
    gap: float
    weak_prediction: int
    strong_prediction: int | None
    final_prediction: int
    truth: int | None = None

    def __post_init__(self) -> None:
        if self.used not in ("weak", "strong"):
            raise ValueError(f"unknown decoder {self.used!r}")
        if self.used == "strong" and (self.strong_prediction is None or self.final_prediction != self.strong_prediction):
            raise ValueError("a strong outcome needs a strong prediction equal to the final one")
        if self.used == "weak" and self.final_prediction != self.weak_prediction:
            raise ValueError("a weak outcome must keep the weak prediction")

    def _correct(self, prediction: int | None) -> bool | None:
        if self.truth is None or prediction is None:
            return None
        return prediction == self.truth

    @property
    def weak_correct(self) -> bool | None:
        return self._correct(self.weak_prediction)

    @property
    def strong_correct(self) -> bool | None:
        return self._correct(self.strong_prediction)

    @property
    def final_correct(self) -> bool | None:
        return self._correct(self.final_prediction)


@dataclass
class WeakResult:
    prediction: int
    gap: float


def weak_decode(model: CodeModel, events: DetectionEvents, kind: GapKind = "complementary", cluster_mode: str = "certified") -> WeakResult:
    """Weak prediction and gap on the memory experiment's decoding graph."""
    graph = model.graphs[model.spec.decoding_basis]
    if kind == "complementary":
        base = mwpm_decode(graph, events)
        return WeakResult(base.flip, complementary_gap(graph, events, base).gap)
    m, clusters = uf_decode(graph, events)
    return WeakResult(m.flip, cluster_gap(graph, clusters, cluster_mode).gap)


def strong_decode(decoder: StrongDecoder, events: DetectionEvents) -> int:
    basis = decoder.model.spec.decoding_basis
    return decoder.decode(events, (basis,))[basis].flip


_STRONG_CACHE: dict[int, tuple[CodeModel, StrongDecoder]] = {}


def _strong_for(model: CodeModel) -> StrongDecoder:
    hit = _STRONG_CACHE.get(id(model))
    if hit is None or hit[0] is not model:
        if len(_STRONG_CACHE) > 8:
            _STRONG_CACHE.pop(next(iter(_STRONG_CACHE)))
        hit = (model, StrongDecoder(model))
        _STRONG_CACHE[id(model)] = hit
    return hit[1]


def decode_with_switching(
    events: DetectionEvents,
    model: CodeModel,
    policy: SwitchPolicy,
    strong: StrongDecoder | None = None,
    truth: int | None = None,
) -> SwitchOutcome:
    """Weak decode, then switch to the strong decoder iff ``g < g_th``."""
    if strong is None:
        strong = _strong_for(model)
    if policy.parallel_launch:
        with ThreadPoolExecutor(max_workers=1) as pool:
            pending = pool.submit(strong_decode, strong, events)
            weak = weak_decode(model, events, policy.kind, policy.cluster_mode)
            if not policy.switches(weak.gap):
                # Result discarded; a call already running finishes without side effects.
                pending.cancel()
                return SwitchOutcome("weak", weak.gap, weak.prediction, None, weak.prediction, truth)
            s = pending.result()
        return SwitchOutcome("strong", weak.gap, weak.prediction, s, s, truth)
    weak = weak_decode(model, events, policy.kind, policy.cluster_mode)
    if not policy.switches(weak.gap):
        return SwitchOutcome("weak", weak.gap, weak.prediction, None, weak.prediction, truth)
    s = strong_decode(strong, events)
    return SwitchOutcome("strong", weak.gap, weak.prediction, s, s, truth)


# --------------------------------------------------------------------------
# Spectrum
# --------------------------------------------------------------------------


@dataclass
class GapSpectrum:
    """Per-shot gaps with weak (and optionally strong) error flags.

    ``strong_errors[k]`` is ``NOT_EVALUATED`` when the strong decoder did not
    run on shot ``k``.
    """

    gaps: np.ndarray
    weak_errors: np.ndarray
    strong_errors: np.ndarray
    bin_width: float = 1.0
    edges: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.gaps = np.asarray(self.gaps, dtype=np.float64)
        self.weak_errors = np.asarray(self.weak_errors, dtype=np.int8)
        self.strong_errors = np.asarray(self.strong_errors, dtype=np.int8)
        n = len(self.gaps)
        if self.weak_errors.shape != (n,) or self.strong_errors.shape != (n,):
            raise ValueError("gaps and error flags must have equal length")
        if n and (np.any(self.gaps < 0.0) or not np.all(np.isfinite(self.gaps))):
            raise ValueError("gaps must be finite and non-negative")
        if not self.bin_width > 0.0:
            raise ValueError("bin_width must be positive")
        top = float(self.gaps.max()) if n else 0.0
        nbins = int(math.floor(top / self.bin_width)) + 1
        self.edges = self.bin_width * np.arange(nbins + 1, dtype=np.float64)

    @classmethod
    def from_arrays(cls, gaps, weak_errors, strong_errors=None, bin_width: float = 1.0) -> GapSpectrum:
        gaps = np.asarray(gaps, dtype=np.float64)
        if strong_errors is None:
            strong_errors = np.full(len(gaps), NOT_EVALUATED, dtype=np.int8)
        return cls(gaps, weak_errors, strong_errors, bin_width)

    @property
    def total(self) -> int:
        return len(self.gaps)

    @property
    def bin_index(self) -> np.ndarray:
        return np.floor(self.gaps / self.bin_width).astype(np.int64)

    def _bincount(self, weights=None) -> np.ndarray:
        return np.bincount(self.bin_index, weights=weights, minlength=len(self.edges) - 1).astype(np.int64)

    @property
    def counts(self) -> np.ndarray:
        return self._bincount()

    @property
    def weak_error_counts(self) -> np.ndarray:
        return self._bincount(self.weak_errors)

    @property
    def strong_evaluated_counts(self) -> np.ndarray:
        return self._bincount((self.strong_errors != NOT_EVALUATED).astype(np.int64))

    @property
    def strong_error_counts(self) -> np.ndarray:
        return self._bincount((self.strong_errors == 1).astype(np.int64))

    @property
    def empty(self) -> np.ndarray:
        """Bins without shots; their rates are NaN rather than zero."""
        return self.counts == 0

    @property
    def density(self) -> np.ndarray:
        """``p(g)`` per dB: counts over ``N * bin_width``."""
        return self.counts / (max(self.total, 1) * self.bin_width)

    @property
    def weak_conditional(self) -> np.ndarray:
        """``P_weak(e|g)`` per bin."""
        c = self.counts
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(c > 0, self.weak_error_counts / np.maximum(c, 1), np.nan)

    @property
    def strong_conditional(self) -> np.ndarray:
        """``P_strong(e|g)`` per bin over the shots where strong ran."""
        c = self.strong_evaluated_counts
        return np.where(c > 0, self.strong_error_counts / np.maximum(c, 1), np.nan)

    def merge(self, other: GapSpectrum) -> GapSpectrum:
        if other.bin_width != self.bin_width:
            raise ValueError("bin widths differ")
        return GapSpectrum(
            np.concatenate([self.gaps, other.gaps]),
            np.concatenate([self.weak_errors, other.weak_errors]),
            np.concatenate([self.strong_errors, other.strong_errors]),
            self.bin_width,
        )


def estimate_spectrum(shots: Iterable[SwitchOutcome], bin_width: float = 1.0) -> GapSpectrum:
    """Spectrum of switch outcomes that carry ground truth."""
    gaps, weak, strong = [], [], []
    for s in shots:
        if s.truth is None:
            raise ValueError("every shot needs ground truth")
        gaps.append(s.gap)
        weak.append(int(not s.weak_correct))
        strong.append(NOT_EVALUATED if s.strong_prediction is None else int(not s.strong_correct))
    return GapSpectrum(np.array(gaps, dtype=np.float64), np.array(weak), np.array(strong), bin_width)


def _check_threshold(g_th: float) -> None:
    if not g_th >= 0.0:
        raise ValueError(f"g_th must be >= 0, got {g_th!r}")


def thresholded_error_rate(spectrum: GapSpectrum, g_th: float) -> float:
    """Weak errors on shots with ``g >= g_th``, over all shots."""
    _check_threshold(g_th)
    if spectrum.total == 0:
        return 0.0
    tail = spectrum.gaps >= g_th
    return int(spectrum.weak_errors[tail].sum()) / spectrum.total


def switching_rate(spectrum: GapSpectrum, g_th: float) -> float:
    """Fraction of shots with ``g < g_th``."""
    _check_threshold(g_th)
    if spectrum.total == 0:
        return 0.0
    return int(np.count_nonzero(spectrum.gaps < g_th)) / spectrum.total


def select_threshold(spectrum: GapSpectrum, p_l_strong: float, epsilon: float) -> float:
    """Smallest grid threshold with ``P_L,th(g_th) <= epsilon * p_l_strong``.

    The grid is the bin edges up to the largest observed gap.
    """
    if not p_l_strong > 0.0:
        raise ValueError("p_l_strong must be positive")
    if not epsilon > 0.0:
        raise ValueError("epsilon must be positive")
    target = epsilon * p_l_strong
    n = spectrum.total
    if n == 0:
        return 0.0
    top = float(spectrum.gaps.max())
    # Weak-error mass at or above each candidate, from per-bin counts.
    err = spectrum.weak_error_counts
    tail = np.cumsum(err[::-1])[::-1]
    for k, g in enumerate(spectrum.edges[:-1]):
        if g > top:
            break
        if tail[k] / n <= target:
            return float(g)
    raise ThresholdUnreachable(
        f"thresholded error rate {tail[-1] / n:.3g} at the largest observed gap still exceeds {target:.3g}"
    )


def switched_error_rate(shots: GapSpectrum | Sequence[SwitchOutcome], g_th: float) -> float:
    """Strong errors below ``g_th`` plus weak errors at or above it, over all shots."""
    _check_threshold(g_th)
    spectrum = shots if isinstance(shots, GapSpectrum) else estimate_spectrum(shots)
    n = spectrum.total
    if n == 0:
        return 0.0
    below = spectrum.gaps < g_th
    strong = spectrum.strong_errors[below]
    if np.any(strong == NOT_EVALUATED):
        raise ValueError(f"{int(np.count_nonzero(strong == NOT_EVALUATED))} sub-threshold shots lack a strong evaluation")
    return (int(strong.sum()) + int(spectrum.weak_errors[~below].sum())) / n


def log_odds_slope(spectrum: GapSpectrum, min_count: int = 1) -> float:
    """Least-squares slope of ``log(P/(1-P))`` of ``P_weak(e|g)`` against bin centre.

    Bins whose rate is 0 or 1, or that hold fewer than ``min_count`` shots,
    are skipped.
    """
    c = spectrum.counts
    e = spectrum.weak_error_counts
    keep = (c >= max(min_count, 1)) & (e > 0) & (e < c)
    if np.count_nonzero(keep) < 2:
        raise ValueError("need at least two bins with intermediate error rates")
    rate = e[keep] / c[keep]
    centres = spectrum.edges[:-1][keep] + 0.5 * spectrum.bin_width
    y = np.log(rate / (1.0 - rate))
    return float(np.polyfit(centres, y, 1, w=np.sqrt(c[keep]))[0])
