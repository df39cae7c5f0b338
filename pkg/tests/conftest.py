import math
import os

import numpy as np
import pytest

from lametoy.selftest import smooth_random_field
from lametoy.spectral import Grid3

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def grid2pi():
    return Grid3(16, 2 * math.pi)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def smooth_field():
    return smooth_random_field


def slow_enabled() -> bool:
    return os.environ.get("LAMETOY_SLOW", "") == "1"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
