import numpy as np
import pytest

from helpers import NOISE_800MHZ
from risopt import LinkBudget


@pytest.fixture
def lb():
    return LinkBudget(0.5, NOISE_800MHZ)


@pytest.fixture
def unit_lb():
    return LinkBudget(1.0, 1.0)


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one ``PASS``/``FAIL`` line per acceptance criterion."""

    def _report(number, title, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})"
        print(line)
        ACCEPTANCE_LINES.append(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
