import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: long-running acceptance criteria")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for an acceptance criterion and print it."""

    def emit(criterion, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
