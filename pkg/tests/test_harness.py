from __future__ import annotations

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from decswitch.harness.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from decswitch.harness.config import ConfigError, ExperimentConfig, parse_config
from decswitch.harness.experiments import (
    backlog_gammas,
    point_seed,
    run_backlog_suite,
    run_bounds,
    run_memory_experiment,
    run_threshold_curve,
    run_tradeoff_scan,
)
from decswitch.harness.results import read_table


def small(**kw) -> ExperimentConfig:
    base = dict(distances=(3,), p=(0.05,), shots=300, seed=11)
    base.update(kw)
    return ExperimentConfig(**base).validate()


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig(experiment="backlog", p=(0.01, 0.02), rounds=4, gammas=(1e-3,), r_op=None)
        assert parse_config("\n".join(cfg.to_lines())) == cfg

    def test_comments_and_lists(self):
        cfg = parse_config("# header\n\ndistances = 3, 5  # two\nseed = 7\n")
        assert cfg.distances == (3, 5) and cfg.seed == 7

    @pytest.mark.parametrize("text", ["bogus = 1", "seed = 1\nseed = 2", "seed = x", "no equals sign", "p = nan"])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    @pytest.mark.parametrize("change", [dict(p=(0.6,)), dict(distances=(4,)), dict(shots=0), dict(schemes=("fast",)),
                                        dict(f_weak=(0.97,)), dict(experiment="nope"), dict(seed=-1)])
    def test_validation(self, change):
        with pytest.raises(ConfigError):
            ExperimentConfig(**change).validate()

    def test_point_seeds_are_distinct(self):
        seeds = {point_seed(0, i, j) for i in range(4) for j in range(4)}
        assert len(seeds) == 16


class TestCLI:
    def test_ok(self, tmp_path):
        out = tmp_path / "res"
        assert main(["bounds", "--out", str(out)]) == EXIT_OK
        cfg, cols, rows = read_table(out / "bounds.csv")
        assert cfg.experiment == "bounds" and "gamma_closed" in cols and len(rows) == 5
        summary = json.loads((out / "bounds.json").read_text())
        assert summary["rows"] == 5 and summary["seed"] == 0

    def test_bad_p(self, tmp_path, capsys):
        assert main(["memory", "--p", "0.7", "--out", str(tmp_path)]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_bad_config_file(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("unknown = 3\n")
        assert main(["memory", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
        assert main(["memory", "--config", str(tmp_path / "missing.cfg")]) == EXIT_CONFIG

    def test_mismatched_experiment(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("experiment = backlog\n")
        assert main(["memory", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_runtime_failure(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert main(["bounds", "--out", str(blocker)]) == EXIT_RUNTIME

    def test_module_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "decswitch", "bounds", "--out", str(tmp_path)],
                             capture_output=True, text=True)
        assert res.returncode == 0 and res.stdout.strip().endswith("bounds.csv")

    def test_overrides(self, tmp_path):
        args = ["memory", "--d", "3", "--p", "0.0", "--shots", "50", "--gth-db", "0,5", "--seed", "3",
                "--out", str(tmp_path)]
        assert main(args) == EXIT_OK
        cfg, cols, rows = read_table(tmp_path / "memory.csv")
        assert cfg.distances == (3,) and cfg.p == (0.0,) and cfg.g_th_db == (0.0, 5.0) and cfg.seed == 3
        assert len(rows) == 2


class TestMemory:
    def test_zero_noise(self):
        t = run_memory_experiment(small(p=(0.0,), shots=100))
        for name in ("weak_errors", "strong_errors", "switched_errors", "switches"):
            assert set(t.column(name)) == {0}

    def test_zero_threshold_is_weak(self):
        t = run_memory_experiment(small(g_th_db=(0.0, 1e9)))
        row0, row_inf = t.rows
        c = t.columns.index
        assert row0[c("P_L_switch")] == row0[c("P_L_weak")] and row0[c("switches")] == 0
        assert row_inf[c("P_L_switch")] == row_inf[c("P_L_strong")] and row_inf[c("gamma_switch")] == 1.0

    def test_byte_identical(self, tmp_path):
        cfg = small(shots=120)
        a = run_memory_experiment(cfg).to_csv()
        b = run_memory_experiment(cfg).to_csv()
        assert a == b
        assert run_memory_experiment(cfg.replace(seed=12)).to_csv() != a

    def test_read_back(self, tmp_path):
        t = run_memory_experiment(small(shots=80))
        csv_path, _ = t.write(tmp_path)
        cfg, cols, rows = read_table(csv_path)
        assert cfg == t.config and tuple(cols) == t.columns
        assert [float(x) for x in rows[0][4:6]] == [float(v) for v in t.rows[0][4:6]]

    def test_weak_error_falls_with_distance(self):
        t = run_threshold_curve(small(distances=(3, 5), p=(0.01,), shots=4000))
        pl = t.column("P_L_weak")
        assert pl[1] < pl[0]


class TestTradeoff:
    def test_endpoints_and_monotone(self):
        cfg = small(shots=400, gth_max_db=30.0, gth_step_db=5.0, strong_eval="all")
        t = run_tradeoff_scan(cfg)
        gamma = t.column("gamma_switch")
        pl = t.column("P_L_switch")
        assert t.column("g_th_db")[0] == 0.0 and gamma[0] == 0.0
        assert all(a <= b for a, b in zip(gamma, gamma[1:]))
        assert sum(t.column("optimal")) == 1
        weak = run_memory_experiment(cfg.replace(g_th_db=(0.0,))).column("P_L_weak")[0]
        assert pl[0] == weak


class TestBacklog:
    def test_bound_column(self):
        t = run_backlog_suite(small(experiment="backlog", schemes=("double",), f_weak=(0.7,), ensemble=30, n_gate=500))
        assert t.column("gamma_bound_exact")[0] == pytest.approx(2.31e-2, rel=1e-2)
        rows = dict(zip(t.column("gamma_over_bound"), t.column("divergence_probability")))
        assert all(p == 0.0 for x, p in rows.items() if x < 1)
        assert t.column("r_com")[0] == 49

    def test_naive_worse_than_double(self):
        cfg = small(experiment="backlog", schemes=("naive", "double"), f_weak=(0.9,), gammas=(1e-3,),
                    gamma_factors=(), ensemble=200)
        t = run_backlog_suite(cfg)
        p = dict(zip(t.column("scheme"), t.column("divergence_probability")))
        assert p["naive"] > p["double"] == 0.0

    def test_gamma_grid(self):
        cfg = small(experiment="backlog", gammas=(1.0,), gamma_factors=(0.5, 2.0))
        g = backlog_gammas(cfg, 0.0)
        assert g == sorted(g) and g[-1] == 1.0 and g[0] == pytest.approx(0.025)


def test_bounds_table():
    t = run_bounds(small(experiment="bounds", f_weak=(0.0, 0.7)))
    assert t.column("r_com_min") == [0, 49]
    assert t.column("gamma_closed")[0] == pytest.approx(0.05)
    assert all(math.isfinite(x) for x in t.column("gamma_exact"))
    assert np.all(np.array(t.column("f_strong")) == 10.0)
