import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def burgers_grid():
    from blockpursuit.pde.burgers import solve_burgers

    return solve_burgers()


@pytest.fixture(scope="session")
def pde_system(burgers_grid):
    from blockpursuit.pde.bspline import BsplineBasis
    from blockpursuit.pde.features import evaluate_features
    from blockpursuit.pde.identify import assemble_block_system

    values, u_t = evaluate_features(burgers_grid)
    return assemble_block_system(values, u_t, BsplineBasis(), burgers_grid)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=int):
        passed, detail = results[key]
        terminalreporter.write_line(f"CRITERION {key}: {'PASS' if passed else 'FAIL'} ({detail})")
