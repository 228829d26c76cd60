import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cylflow._random import random_field, scaled
from cylflow.stable_manifold import fixed_point, sample_seed

settings.register_profile(
    "cylflow",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("cylflow")

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line, then assert it."""

    def record(name: str, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'}  {name}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_field(rng, trunc=(24, 8), n_axis=1, norm=0.05, degree=3):
    """Random low-degree field, scaled and capped so the graph condition holds far out."""
    return scaled(random_field(rng, trunc, n_axis, degree), norm, sup_cap=0.3)


@pytest.fixture(scope="session")
def seed_default():
    return sample_seed(np.random.default_rng(42), 0.01)


@pytest.fixture(scope="session")
def fixed_point_default(seed_default):
    return fixed_point(seed_default)
