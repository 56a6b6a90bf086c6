import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("evcs", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("evcs")

# Filled by the acceptance suite, printed once at the end of the session.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _quiet_saturation():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="hot-spot temperature above")
        yield
