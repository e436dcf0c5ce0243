import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from microinit.dynamics import LorenzModel, MackeyGlassModel, sample_attractor

settings.register_profile(
    "default", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def lorenz():
    return LorenzModel()


@pytest.fixture(scope="session")
def mackey_glass():
    return MackeyGlassModel()


@pytest.fixture(scope="session")
def lorenz_point(lorenz):
    return sample_attractor(lorenz, np.random.default_rng(11))


@pytest.fixture(scope="session")
def mg_point(mackey_glass):
    return sample_attractor(mackey_glass, np.random.default_rng(11))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        passed, detail = results[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
