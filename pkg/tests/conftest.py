import sys

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("levelgeom", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("levelgeom")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
