from __future__ import annotations

import numpy as np
import pytest

from vjmlink.orthoglide import orthoglide_model

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def model():
    return orthoglide_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
