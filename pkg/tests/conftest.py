import numpy as np
import pytest

from bregdiv.gaussian_divergences import GaussianSummary


def random_spd(rng, d, low=0.1, high=3.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (Q * rng.uniform(low, high, d)) @ Q.T


def random_psd(rng, d, rank=None):
    rank = d if rank is None else rank
    A = rng.standard_normal((d, rank))
    return A @ A.T


def random_summary(rng, d, spread=1.0):
    return GaussianSummary(rng.normal(scale=spread, size=d), random_spd(rng, d))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
