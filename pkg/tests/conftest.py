import os

import pytest
from hypothesis import HealthCheck, settings

from qwc.analysis import CaseConfig, setup_case

os.environ.setdefault("QWC_JOBS", "1")

settings.register_profile(
    "qwc", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("qwc")


@pytest.fixture(scope="session")
def case1():
    """Case-1 input and chirp: exponential tau = 1, rise 0.02, compression 100."""
    return setup_case(CaseConfig())


@pytest.fixture(scope="session")
def case1_small():
    """Cheaper case-1 variant (compression 25 on 2048 points) for unit tests."""
    return setup_case(CaseConfig(compression=25.0, n_points=2048, n_steps=512))


def pytest_terminal_summary(terminalreporter):
    import sys

    acc = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance") and hasattr(mod, "LINES"):
            acc = mod.LINES
    if acc:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acc, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
