"""Flat ``key = value`` experiment configuration.

One key per line, ``#`` starts a comment, list values are comma separated.
Unknown or repeated keys are errors.  :meth:`ExperimentConfig.to_lines`
writes the same format, so a config echoed into a result header parses
back to an equal object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

EXPERIMENTS = ("memory", "gap-histogram", "spectrum", "tradeoff", "threshold-curve", "backlog", "bounds")
DECODER_PAIRS = ("mwpm+comp", "uf+cluster")
STRONG_EVAL = ("auto", "all", "audit")
SCHEMES = ("naive", "sliding", "double")


class ConfigError(ValueError):
    """Invalid configuration; reported before any work starts."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "memory"
    # code and noise
    distances: tuple[int, ...] = (3, 5, 7)
    p: tuple[float, ...] = (0.03,)
    p_ref: float = 0.01
    rounds: int | None = None
    basis: str = "Z"
    # decoders and policy
    decoders: str = "mwpm+comp"
    cluster_mode: str = "certified"
    g_th_db: tuple[float, ...] = (10.0,)
    epsilon: float = 0.1
    strong_eval: str = "auto"
    audit_fraction: float = 0.01
    bin_width_db: float = 1.0
    gth_max_db: float = 50.0
    gth_step_db: float = 1.0
    # Monte Carlo
    shots: int = 10000
    seed: int = 0
    # scheduler
    schemes: tuple[str, ...] = SCHEMES
    f_weak: tuple[float, ...] = (0.0, 0.1, 0.4, 0.7, 0.9)
    gammas: tuple[float, ...] = ()
    gamma_factors: tuple[float, ...] = (0.25, 0.5, 0.9, 4.0)
    sched_d: int = 21
    tau_gen: float = 1.0
    tau_dec_strong: float = 10.0
    t_comm_weak: float = 1.0
    t_comm_strong: float = 10.0
    r_op: float | None = None
    r_buf: float | None = None
    alpha: float = 2.0
    n_gate: int = 10000
    ensemble: int = 1000
    cap: float = 1e6
    trajectory_samples: int = 0

    def replace(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)

    @property
    def weak_kind(self) -> str:
        return "complementary" if self.decoders == "mwpm+comp" else "cluster"

    def validate(self) -> ExperimentConfig:
        """Raise :class:`ConfigError` unless every parameter is usable."""
        from ..backlog import double_commit_size, sliding_commit_size
        from ..code_model import NoiseParams, SurfaceCodeSpec

        def need(cond: bool, msg: str) -> None:
            if not cond:
                raise ConfigError(msg)

        need(self.experiment in EXPERIMENTS, f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        need(self.decoders in DECODER_PAIRS, f"decoders must be one of {DECODER_PAIRS}")
        need(self.cluster_mode in ("certified", "residual", "quotient"), f"unknown cluster_mode {self.cluster_mode!r}")
        need(self.strong_eval in STRONG_EVAL, f"strong_eval must be one of {STRONG_EVAL}")
        need(len(self.distances) > 0 and len(self.p) > 0, "distances and p need at least one value")
        need(self.shots >= 1, "shots must be >= 1")
        need(0 <= self.seed < 2**64, "seed must fit in 64 bits")
        need(all(g >= 0.0 for g in self.g_th_db), "g_th_db values must be >= 0")
        need(self.epsilon > 0.0, "epsilon must be > 0")
        need(0.0 <= self.audit_fraction <= 1.0, "audit_fraction must lie in [0, 1]")
        need(self.bin_width_db > 0.0 and self.gth_step_db > 0.0, "bin and step widths must be positive")
        need(self.gth_max_db >= 0.0, "gth_max_db must be >= 0")
        need(0.0 < self.p_ref < 0.5, "p_ref must lie in (0, 0.5)")
        try:
            for d in self.distances:
                SurfaceCodeSpec(d, self.rounds, self.basis)
            for p in self.p:
                if not 0.0 <= p < 0.5:
                    raise ValueError(f"p must lie in [0, 0.5), got {p}")
                NoiseParams(p if p > 0 else self.p_ref)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        need(all(s in SCHEMES for s in self.schemes), f"schemes must be drawn from {SCHEMES}")
        need(all(g >= 0.0 for g in self.gammas) and all(g >= 0.0 for g in self.gamma_factors), "gammas must be >= 0")
        need(self.ensemble >= 1 and self.n_gate >= 1 and self.trajectory_samples >= 0, "ensemble and n_gate must be >= 1")
        try:
            for f in self.f_weak:
                for s in self.schemes:
                    params = self.scheduler(f, s, 0.0)
                    if s == "sliding":
                        sliding_commit_size(params)
                    elif s == "double":
                        double_commit_size(params)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def scheduler(self, f_weak: float, scheme: str, gamma: float):
        from ..backlog import SchedulerParams

        return SchedulerParams(
            tau_gen=self.tau_gen,
            tau_dec_weak=f_weak * self.tau_gen,
            tau_dec_strong=self.tau_dec_strong,
            t_comm_weak=self.t_comm_weak,
            t_comm_strong=self.t_comm_strong,
            d=self.sched_d,
            r_op=self.r_op,
            n_gate=self.n_gate,
            gamma=gamma,
            scheme=scheme,
            r_buf=self.r_buf,
            alpha=self.alpha,
            cap=self.cap,
        )

    def to_lines(self) -> list[str]:
        return [f"{f.name} = {_format(getattr(self, f.name))}" for f in fields(self)]


def _format(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _scalar(kind: str, text: str, key: str):
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            v = float(text)
            if math.isnan(v):
                raise ValueError
            return v
        return text
    except ValueError:
        raise ConfigError(f"{key}: cannot read {text!r} as {kind}") from None


# key -> (scalar kind, is tuple, optional)
_SCHEMA: dict[str, tuple[str, bool, bool]] = {}
for _f in fields(ExperimentConfig):
    _t = str(_f.type)
    _kind = "int" if "int" in _t else "float" if "float" in _t else "str"
    _SCHEMA[_f.name] = (_kind, _t.startswith("tuple"), "None" in _t)


def parse_value(key: str, text: str):
    if key not in _SCHEMA:
        raise ConfigError(f"unknown key {key!r}")
    kind, many, optional = _SCHEMA[key]
    text = text.strip()
    if optional and text.lower() == "none":
        return None
    if many:
        if not text:
            return ()
        return tuple(_scalar(kind, part.strip(), key) for part in text.split(","))
    return _scalar(kind, text, key)


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse flat ``key = value`` text on top of ``base`` (defaults if omitted)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = parse_value(key, value)
    return replace(base or ExperimentConfig(), **values)


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base)
