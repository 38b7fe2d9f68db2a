import numpy as np
import pytest

from riscap._rng import complex_normal


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_psd(rng, n, floor=0.1):
    A = complex_normal(rng, (n, n))
    return A @ A.conj().T / n + floor * np.eye(n)
