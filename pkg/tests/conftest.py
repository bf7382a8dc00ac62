import warnings

import numpy as np
import pytest

from cecht.config import EchtConfig, default_config


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cfg10():
    """Reference design: f0 = 10 Hz, Fs = 256 Hz, N = 54, Butterworth order 2 on [7, 13] Hz."""
    return default_config()


def identity_config(N=32, k0=3, L=None):
    """H = 1 with the tone exactly on bin ``k0``."""
    L = N if L is None else L
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return EchtConfig(N, float(L), float(k0), None, L)


def tone(N, omega, phi0=0.0, amplitude=1.0):
    n = np.arange(N)
    return amplitude * np.cos(omega * n + phi0)
