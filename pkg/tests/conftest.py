import sys

import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    lines = [getattr(mod, "RESULTS", None) for name, mod in list(sys.modules.items()) if name.endswith("test_acceptance")]
    lines = next((x for x in lines if x), None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
