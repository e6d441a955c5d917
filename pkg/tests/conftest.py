import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from latticelie.cauchy import random_cauchy_data, random_net, solve_cauchy

settings.register_profile(
    "default", max_examples=25, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running construction tests")


@pytest.fixture(scope="session")
def generic_net():
    return random_net(11, 5, 5)


@pytest.fixture(scope="session")
def pm_net():
    """A 6x6 projectively minimal net with its quadric field."""
    net, p, _ = solve_cauchy(random_cauchy_data(7, 6, 6))
    return net, p


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
