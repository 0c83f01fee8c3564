import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from degenlab.calculus import decompose
from degenlab.lattice import assemble, build_grid
from degenlab.weights import Weight

settings.register_profile("degenlab", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("degenlab")


@pytest.fixture(scope="session")
def flat64():
    op = assemble(build_grid(1, 1.0, 64), Weight.constant(1.0))
    return op, decompose(op)


@pytest.fixture(scope="session")
def half64():
    op = assemble(build_grid(1, 1.0, 64), Weight.power(0.5))
    return op, decompose(op)


@pytest.fixture(scope="session")
def half_periodic():
    op = assemble(build_grid(1, 1.0, 64, "periodic"), Weight.power(0.5))
    return op, decompose(op)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=int):
        terminalreporter.write_line(results[key])
