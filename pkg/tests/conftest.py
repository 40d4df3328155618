import functools

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

# criterion lines collected by test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def dense_kron(mats):
    """Covariance/precision of the F-order vec: the last mode is outermost."""
    return functools.reduce(np.kron, list(mats)[::-1])


def random_spd(rng, d, cond=5.0):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (q * np.linspace(1.0, cond, d)) @ q.T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
