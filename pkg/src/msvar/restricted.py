"""Zero-restricted Gaussian ML estimation of VAR coefficients by iterated feasible GLS."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from .spectral import TimeSeries
from .varmodel import SupportMask, VarModel, lagged_design, log_likelihood


class EstimationError(ValueError):
    pass


@dataclass
class RestrictedFit:
    model: VarModel
    support: SupportMask
    std_errors: np.ndarray  # (p, K, K), 0 where constrained
    t_stats: np.ndarray  # (p, K, K), 0 where constrained
    p_values: np.ndarray  # (p, K, K), 1 where constrained
    intercept_se: np.ndarray
    loglik: float
    n_obs: int
    converged: bool
    iterations: int

    @property
    def free_params(self) -> int:
        """Free AR coefficients (intercepts excluded)."""
        return self.support.n_free

    def free_coefficients(self) -> list[tuple[int, int, int]]:
        """(i, j, k) triplets of the free AR coefficients, k 1-based lag."""
        k, i, j = np.nonzero(self.support.coeff_support)
        return [(int(a), int(b), int(c) + 1) for a, b, c in zip(i, j, k)]


def _free_index(support: SupportMask) -> np.ndarray:
    """Positions of free parameters in vec([a, A_1, ..., A_p]) (column-major)."""
    p, K, _ = support.coeff_support.shape
    free = np.zeros((K, K * p + 1), dtype=bool)
    free[:, 0] = True
    for k in range(p):
        free[:, 1 + k * K:1 + (k + 1) * K] = support.coeff_support[k]
    return np.flatnonzero(free.ravel(order="F"))


def fit_restricted(data: TimeSeries, p: int, support: SupportMask | None = None, presample: int | None = None,
                   tol: float = 1e-8, max_iter: int = 50, std_errors: bool = True) -> RestrictedFit:
    """Iterated feasible GLS under a zero pattern; intercepts are always free.

    ``presample`` (default p) observations are held back as initial values, so
    fits with different p can share one estimation sample.  With
    ``std_errors=False`` the (cubic-cost) covariance step is skipped and the
    standard errors, t-ratios and p-values come back as nan on free entries.
    """
    K = data.K
    support = SupportMask.full(K, p) if support is None else support
    if support.coeff_support.shape != (p, K, K):
        raise ValueError(f"support has shape {support.coeff_support.shape}, expected {(p, K, K)}")
    start = p if presample is None else presample
    Y, Z = lagged_design(data.values, p, start)
    n = Y.shape[0]
    per_eq = 1 + support.coeff_support.sum(axis=(0, 2)).max(initial=0)
    if n <= per_eq:
        raise EstimationError(f"{n} observations cannot identify {per_eq} parameters per equation")

    idx = _free_index(support)
    rows = idx % K
    cols = idx // K
    G = Z.T @ Z
    G_sub = G[np.ix_(cols, cols)]
    YZ = Y.T @ Z  # K x (Kp+1)

    def solve(sigma_inv):
        N = G_sub * sigma_inv[np.ix_(rows, rows)]
        rhs = (sigma_inv @ YZ).ravel(order="F")[idx]
        try:
            cf = linalg.cho_factor(N, lower=True, check_finite=False)
        except linalg.LinAlgError:
            raise EstimationError("restricted design is rank deficient") from None
        return linalg.cho_solve(cf, rhs, check_finite=False), cf

    def unpack(gamma):
        beta = np.zeros(K * (K * p + 1))
        beta[idx] = gamma
        return beta.reshape((K, K * p + 1), order="F")

    # Sigma = I gives equation-by-equation restricted least squares
    gamma, cf = solve(np.eye(K))
    B = unpack(gamma)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        resid = Y - Z @ B.T
        sigma = resid.T @ resid / n
        try:
            sigma_inv = linalg.inv(sigma, check_finite=False)
        except linalg.LinAlgError:
            raise EstimationError("residual covariance is singular") from None
        sigma_inv = 0.5 * (sigma_inv + sigma_inv.T)
        gamma_new, cf = solve(sigma_inv)
        change = np.max(np.abs(gamma_new - gamma), initial=0.0)
        gamma = gamma_new
        B = unpack(gamma)
        if change < tol:
            converged = True
            break
    resid = Y - Z @ B.T
    sigma = resid.T @ resid / n
    sigma = 0.5 * (sigma + sigma.T)

    if std_errors:
        cov = linalg.cho_solve(cf, np.eye(idx.size), check_finite=False)
        se_vec = np.sqrt(np.maximum(np.diag(cov), 0.0))
    else:
        se_vec = np.full(idx.size, np.nan)
    SE = unpack(se_vec)
    coeffs = np.stack([B[:, 1 + k * K:1 + (k + 1) * K] for k in range(p)])
    coeffs = np.where(support.coeff_support, coeffs, 0.0)
    se = np.stack([SE[:, 1 + k * K:1 + (k + 1) * K] for k in range(p)])
    se = np.where(support.coeff_support, se, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, coeffs / se, np.where(np.isnan(se), np.nan, 0.0))
    pv = np.where(support.coeff_support, 2.0 * stats.norm.sf(np.abs(t)), 1.0)
    model = VarModel(coeffs, B[:, 0], sigma)
    ll = log_likelihood(model, data, start)
    return RestrictedFit(model, support, se, t, pv, SE[:, 0], ll, n, converged, it)


def bic(fit: RestrictedFit | float, T: int, param_count: int) -> float:
    """-2 log L + log(T) * param_count."""
    ll = fit.loglik if isinstance(fit, RestrictedFit) else float(fit)
    return -2.0 * ll + np.log(T) * param_count
