import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# Generic UPB angles (gamma, theta, phi) for A then B; persisted fixture.
UPB_ANGLES = (np.pi / 5, np.pi / 5, np.pi / 7, np.pi / 5, np.pi / 5, np.pi / 7)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def upb_angles():
    return UPB_ANGLES


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
