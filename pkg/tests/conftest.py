from __future__ import annotations

import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from decswitch.code_model import NoiseParams, SurfaceCodeSpec, build_code

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


_MODELS = {}


def code(d: int, p: float, rounds: int | None = None, basis: str = "Z"):
    """Memoised code model; models are read-only in the tests."""
    key = (d, p, rounds, basis)
    if key not in _MODELS:
        _MODELS[key] = build_code(SurfaceCodeSpec(d, rounds, basis), NoiseParams(p))
    return _MODELS[key]


def bits(graph, defects) -> np.ndarray:
    det = np.zeros(graph.num_detectors, dtype=np.uint8)
    det[list(defects)] = 1
    return det


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
