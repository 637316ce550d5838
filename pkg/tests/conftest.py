import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "nlfp",
    max_examples=100,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("nlfp")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    lines = [ln for m in list(sys.modules.values()) for ln in getattr(m, "ACCEPTANCE_LINES", [])]
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines):
            terminalreporter.write_line(ln)
