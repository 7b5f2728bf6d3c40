import pytest
from hypothesis import HealthCheck, settings

from flmtails import Model, symmetric_atoms, two_sided_power

settings.register_profile("default", deadline=None, max_examples=50,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def sym_model():
    """delta_1 + delta_-1 at H = 1/4 with lambda = 1."""
    return Model(symmetric_atoms(), 0.25, lambda_trunc=1.0)


@pytest.fixture(scope="session")
def power_model():
    return Model(two_sided_power(1.5), 0.25)


_ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Collects one verdict line per acceptance criterion for the terminal summary."""
    return request.config.stash.setdefault(_ACCEPTANCE_LINES, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
