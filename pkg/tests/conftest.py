import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, n, spread=1.0):
    """Random symmetric positive-definite matrix with controlled conditioning."""
    X = rng.normal(size=(n, n))
    return spread * (X @ X.T) + n * np.eye(n)


def random_invertible(rng, n, min_det=1e-3):
    while True:
        M = rng.normal(size=(n, n))
        if abs(np.linalg.det(M)) > min_det:
            return M


def random_skew(rng, n):
    X = rng.normal(size=(n, n))
    return X - X.T
