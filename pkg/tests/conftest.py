import numpy as np
import pytest

from microtactics.court import Frame

ACCEPTANCE_LINES: list[str] = []


def make_frame(t=0.0, n_home=5, n_away=5, ball=(47.0, 25.0)):
    home = tuple((10.0 + i, 20.0 + i) for i in range(n_home))
    away = tuple((60.0 + i, 30.0 - i) for i in range(n_away))
    return Frame(t, ball, home, away)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
