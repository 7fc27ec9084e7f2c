import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from msvar.spectral import HermitianSpectrum

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# acceptance verdict lines, echoed in the terminal summary
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


def random_pd_spectrum(rng, K, M=1, window=5, jitter=0.5):
    """M random Hermitian PD matrices (complex Wishart plus a ridge)."""
    mats = []
    for _ in range(M):
        X = rng.standard_normal((K, 2 * K)) + 1j * rng.standard_normal((K, 2 * K))
        mats.append(X @ X.conj().T / (2 * K) + jitter * np.eye(K))
    return HermitianSpectrum(np.array(mats), np.linspace(0.1, 0.4, M), window)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
