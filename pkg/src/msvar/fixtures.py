"""Benchmark VAR models and the random sparse generator used for timing runs.

The published noise matrices are precision matrices; they are inverted here so
every ``VarModel`` carries a covariance.
"""
from __future__ import annotations

import numpy as np

from .varmodel import VarModel, rng_for


def _from_precision(coeffs, precision) -> VarModel:
    precision = np.asarray(precision, dtype=float)
    cov = np.linalg.inv(precision)
    cov = 0.5 * (cov + cov.T)
    coeffs = np.asarray(coeffs, dtype=float)
    return VarModel(coeffs, np.zeros(coeffs.shape[-1]), cov)


MODEL1_A1 = np.array([
    [0, 0, 0, 0, 0, 0, 0, .3, 0, 0],
    [0, 0, .1, 0, 0, 0, .4, 0, 0, .4],
    [0, .6, 0, 0, 0, 0, 0, 0, 0, 0],
    [0, .2, 0, 0, .5, 0, 0, 0, 0, 0],
    [0, .3, 0, .1, 0, 0, .2, .1, .3, .5],
    [.2, 0, 0, 0, .4, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, 0, 0, .6],
    [0, 0, 0, 0, 0, .6, 0, 0, 0, 0],
    [.2, 0, 0, 0, 0, 0, 0, 0, .2, 0],
    [0, 0, 0, 0, .4, 0, 0, 0, 0, 0],
])


def model1_precision(delta: float = 0.5) -> np.ndarray:
    P = np.eye(10)
    P[0, 0] = delta
    for j in range(1, 10):
        P[0, j] = P[j, 0] = delta / (j + 1)
    return P


MODEL2_A1 = np.array([
    [0, .50, .50, .20, 0, 0],
    [0, 0, .30, 0, 0, 0],
    [0, .25, .50, 0, 0, 0],
    [0, 0, 0, 0, .33, .33],
    [0, 0, 0, 0, 0, .20],
    [0, .50, 0, 0, .17, .33],
])

MODEL2_PRECISION = np.array([
    [.17, 0, .25, .030, 0, 0],
    [0, 1.40, .34, .25, .04, .58],
    [.25, .34, .55, .05, 0, 0],
    [.03, .25, .05, .26, 0, .42],
    [0, .04, 0, 0, 1.51, .36],
    [0, .58, 0, .42, .36, .98],
])


def _ring(diag: float, off: float, K: int = 6) -> np.ndarray:
    A = np.eye(K) * diag
    for i in range(K):
        A[i, (i + 1) % K] = A[i, (i - 1) % K] = off
    return A


MODEL3_A1 = _ring(-0.6, 0.4)
MODEL3_A2 = _ring(-0.3, 0.2)
MODEL3_PRECISION = _ring(1.0, -0.3)


def model1() -> VarModel:
    return _from_precision(MODEL1_A1, model1_precision())


def model2() -> VarModel:
    return _from_precision(MODEL2_A1, MODEL2_PRECISION)


def model3() -> VarModel:
    return _from_precision(np.stack([MODEL3_A1, MODEL3_A2]), MODEL3_PRECISION)


def random_sparse(K: int, density: float = 0.25, p: int = 1, seed=0) -> VarModel:
    """Bernoulli(density) support with uniform +-[0.1, 1] values, rescaled to stability.

    Each lag matrix is divided by (largest singular value + 0.1), which bounds the
    p = 1 spectral radius below one.  For p > 1 the whole stacked block
    [A_1 ... A_p] is rescaled the same way.
    """
    rng = rng_for(seed)
    mask = rng.random((p, K, K)) < density
    vals = rng.uniform(0.1, 1.0, (p, K, K)) * rng.choice([-1.0, 1.0], (p, K, K))
    A = np.where(mask, vals, 0.0)
    sigma = np.linalg.norm(np.hstack(list(A)), 2)
    A = A / (sigma + 0.1)
    return VarModel(A, np.zeros(K), np.eye(K))


FIXTURES = {"model1": model1, "model2": model2, "model3": model3}


def get_fixture(name: str) -> VarModel:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise ValueError(f"unknown fixture {name!r}; choose from {sorted(FIXTURES)} or random-sparse") from None
