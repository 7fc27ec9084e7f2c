"""VAR(p) models: stability, simulation, conditional likelihood, forecasting."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .spectral import TimeSeries


@dataclass(frozen=True)
class VarModel:
    """Y_t = a + A_1 Y_{t-1} + ... + A_p Y_{t-p} + u_t,  u_t ~ N(0, noise_cov)."""

    coeffs: np.ndarray  # (p, K, K)
    intercept: np.ndarray  # (K,)
    noise_cov: np.ndarray  # (K, K)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim == 2:
            coeffs = coeffs[None]
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2] or coeffs.shape[0] < 1:
            raise ValueError("coeffs must have shape (p, K, K) with p >= 1")
        K = coeffs.shape[1]
        intercept = np.zeros(K) if self.intercept is None else np.array(self.intercept, dtype=float).reshape(-1)
        cov = np.array(self.noise_cov, dtype=float)
        if intercept.shape != (K,) or cov.shape != (K, K):
            raise ValueError("intercept / noise_cov dimensions do not match coeffs")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(cov))):
            raise ValueError("noise_cov must be symmetric")
        for arr in (coeffs, intercept, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "intercept", intercept)
        object.__setattr__(self, "noise_cov", cov)

    @property
    def p(self) -> int:
        return self.coeffs.shape[0]

    @property
    def K(self) -> int:
        return self.coeffs.shape[1]

    def companion(self) -> np.ndarray:
        K, p = self.K, self.p
        C = np.zeros((K * p, K * p))
        C[:K] = np.hstack(list(self.coeffs))
        C[K:, :-K] = np.eye(K * (p - 1))
        return C

    def padded(self, p: int) -> np.ndarray:
        """Coefficient stack zero-padded (or truncated) to p lags."""
        out = np.zeros((p, self.K, self.K))
        q = min(p, self.p)
        out[:q] = self.coeffs[:q]
        return out

    def permuted(self, perm: Sequence[int]) -> "VarModel":
        perm = np.asarray(perm)
        return VarModel(self.coeffs[:, perm][:, :, perm], self.intercept[perm],
                        self.noise_cov[np.ix_(perm, perm)])

    def __eq__(self, other):
        if not isinstance(other, VarModel):
            return NotImplemented
        return (self.coeffs.shape == other.coeffs.shape
                and np.array_equal(self.coeffs, other.coeffs)
                and np.array_equal(self.intercept, other.intercept)
                and np.array_equal(self.noise_cov, other.noise_cov))

    __hash__ = None

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "intercept": self.intercept.tolist(),
            "coeffs": [A.tolist() for A in self.coeffs],
            "noise_cov": self.noise_cov.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VarModel":
        coeffs = np.array(d["coeffs"], dtype=float)
        if coeffs.ndim == 2:
            coeffs = coeffs[None]
        if "p" in d and int(d["p"]) != coeffs.shape[0]:
            raise ValueError(f"p={d['p']} disagrees with {coeffs.shape[0]} coefficient matrices")
        K = coeffs.shape[1]
        if "noise_cov" in d:
            cov = np.array(d["noise_cov"], dtype=float)
        elif "noise_precision" in d:
            cov = np.linalg.inv(np.array(d["noise_precision"], dtype=float))
            cov = 0.5 * (cov + cov.T)
        else:
            cov = np.eye(K)
        return cls(coeffs, d.get("intercept", np.zeros(K)), cov)


def save_model(model: VarModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=2))


def load_model(path: str | Path) -> VarModel:
    return VarModel.from_dict(json.loads(Path(path).read_text()))


def spectral_radius(model: VarModel) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(model.companion()))))


def is_stable(model: VarModel) -> tuple[bool, float]:
    """Return (radius < 1, radius) for the companion matrix."""
    radius = spectral_radius(model)
    return radius < 1.0, radius


def _cholesky(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise ValueError("noise covariance is not positive definite") from None


def rng_for(seed: int | Sequence[int]) -> np.random.Generator:
    """Counter-based generator keyed on the seed (Philox)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def simulate(model: VarModel, T: int, burn_in: int = 500, seed: int | Sequence[int] = 0,
             names: Sequence[str] = ()) -> TimeSeries:
    """Iterate the VAR recursion from a zero state and keep the last T draws."""
    if T < 1:
        raise ValueError("T must be positive")
    stable, radius = is_stable(model)
    if not stable:
        raise ValueError(f"model is not stable (spectral radius {radius:.6g})")
    chol = _cholesky(model.noise_cov)
    K, p = model.K, model.p
    n = T + burn_in
    noise = rng_for(seed).standard_normal((n, K)) @ chol.T
    y = np.zeros((n + p, K))
    A = model.coeffs
    a = model.intercept
    for t in range(n):
        acc = a + noise[t]
        for k in range(p):
            acc = acc + A[k] @ y[p + t - 1 - k]
        y[p + t] = acc
    return TimeSeries(y[p + burn_in:], tuple(names))


def lagged_design(values: np.ndarray, p: int, start: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Responses Y (n x K) and regressors [1, Y_{t-1}, ..., Y_{t-p}] (n x (Kp+1)).

    The first ``start`` (default p) observations are used only as lags.
    """
    start = p if start is None else start
    if start < p:
        raise ValueError("start must be at least p")
    T = values.shape[0]
    if T <= start:
        raise ValueError(f"need more than {start} observations, got {T}")
    Y = values[start:]
    cols = [np.ones((T - start, 1))]
    for k in range(1, p + 1):
        cols.append(values[start - k:T - k])
    return Y, np.hstack(cols)


def residuals(model: VarModel, data: TimeSeries, start: int | None = None) -> np.ndarray:
    Y, Z = lagged_design(data.values, model.p, start)
    B = np.hstack([model.intercept[:, None]] + list(model.coeffs))
    return Y - Z @ B.T


def log_likelihood(model: VarModel, data: TimeSeries, start: int | None = None) -> float:
    """Gaussian log-likelihood conditional on the first ``start`` (default p) observations."""
    if data.K != model.K:
        raise ValueError("data and model dimensions differ")
    r = residuals(model, data, start)
    n, K = r.shape
    sign, logdet = np.linalg.slogdet(model.noise_cov)
    if sign <= 0:
        raise ValueError("noise covariance is singular or indefinite")
    try:
        chol = np.linalg.cholesky(model.noise_cov)
    except np.linalg.LinAlgError:
        raise ValueError("noise covariance is singular or indefinite") from None
    w = np.linalg.solve(chol, r.T)
    quad = float(np.sum(w * w))
    return -0.5 * n * (K * np.log(2 * np.pi) + logdet) - 0.5 * quad


def forecast(model: VarModel, history: TimeSeries | np.ndarray, h: int) -> np.ndarray:
    """Iterated conditional-mean forecasts for steps 1..h, shape (h, K)."""
    values = history.values if isinstance(history, TimeSeries) else np.atleast_2d(np.asarray(history, float))
    p = model.p
    if values.shape[0] < p:
        raise ValueError(f"need at least p={p} observations of history, got {values.shape[0]}")
    if h < 1:
        raise ValueError("horizon must be positive")
    buf = list(values[values.shape[0] - p:])
    out = np.empty((h, model.K))
    for step in range(h):
        y = model.intercept.copy()
        for k in range(p):
            y = y + model.coeffs[k] @ buf[-1 - k]
        out[step] = y
        buf.append(y)
    return out


@dataclass(frozen=True)
class SupportMask:
    """Which AR coefficients are free (True) and which are pinned to zero.

    ``coeff_support[k, i, j]`` refers to A_{k+1}(i, j).  ``pair_support`` is the
    symmetric series-pair view with a True diagonal.
    """

    coeff_support: np.ndarray

    def __post_init__(self):
        cs = np.array(self.coeff_support, dtype=bool)
        if cs.ndim != 3 or cs.shape[1] != cs.shape[2]:
            raise ValueError("coeff_support must have shape (p, K, K)")
        cs.setflags(write=False)
        object.__setattr__(self, "coeff_support", cs)

    @property
    def p(self) -> int:
        return self.coeff_support.shape[0]

    @property
    def K(self) -> int:
        return self.coeff_support.shape[1]

    @property
    def pair_support(self) -> np.ndarray:
        any_lag = self.coeff_support.any(axis=0)
        pairs = any_lag | any_lag.T
        np.fill_diagonal(pairs, True)
        return pairs

    @property
    def n_free(self) -> int:
        return int(self.coeff_support.sum())

    @classmethod
    def from_pairs(cls, pair_support: np.ndarray, p: int) -> "SupportMask":
        """Free the diagonal plus both directions of every selected pair at every lag."""
        pairs = np.array(pair_support, dtype=bool)
        if pairs.ndim != 2 or pairs.shape[0] != pairs.shape[1]:
            raise ValueError("pair_support must be square")
        pairs = pairs | pairs.T
        np.fill_diagonal(pairs, True)
        return cls(np.broadcast_to(pairs, (p,) + pairs.shape).copy())

    @classmethod
    def full(cls, K: int, p: int) -> "SupportMask":
        return cls(np.ones((p, K, K), dtype=bool))

    @classmethod
    def empty(cls, K: int, p: int) -> "SupportMask":
        return cls(np.zeros((p, K, K), dtype=bool))

    def issubset(self, other: "SupportMask") -> bool:
        if self.coeff_support.shape != other.coeff_support.shape:
            return False
        return bool(np.all(~self.coeff_support | other.coeff_support))

    def __eq__(self, other):
        if not isinstance(other, SupportMask):
            return NotImplemented
        return (self.coeff_support.shape == other.coeff_support.shape
                and np.array_equal(self.coeff_support, other.coeff_support))

    __hash__ = None

    def to_dict(self) -> dict:
        return {"coeff_support": self.coeff_support.astype(int).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SupportMask":
        return cls(np.array(d["coeff_support"], dtype=bool))
