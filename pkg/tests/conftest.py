import numpy as np
import pytest

from progadjust.dataset import TrialDataset

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_trial(rng, n=60, p=3, pi1=0.5, effect=1.0):
    w = rng.normal(size=(n, p))
    a = np.zeros(n, dtype=int)
    a[rng.permutation(n)[: n // 2]] = 1
    y = effect * a + w @ np.linspace(1, 0.2, p) + np.sin(2 * w[:, 0]) + rng.normal(size=n)
    return TrialDataset(y, a, w, tuple(f"x{j}" for j in range(p)), pi1)


@pytest.fixture
def small_trial(rng):
    return make_trial(rng)
