import numpy as np
import pytest

from levysync.levy_process import LevySpec, TimeGrid, build_noise_paths

# acceptance lines collected by test_acceptance.py, echoed in the summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def brownian_paths(seed, n, t_start=-40.0, t_end=2.0, step=1e-3):
    return build_noise_paths(LevySpec("brownian"), TimeGrid(t_start, t_end, step), seed, n)


def zero_paths(n, t_start=-40.0, t_end=2.0, step=1e-3):
    return build_noise_paths(LevySpec("compound-poisson", intensity=0.0), TimeGrid(t_start, t_end, step), 0, n)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
