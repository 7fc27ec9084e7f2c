"""Group-lasso penalized Whittle likelihood over Hermitian precision matrices.

Solves

    min_Theta  sum_n L [ -log det Theta[n] + tr(f[n] Theta[n]) ]
               + lam * sum_{i != j} || Theta_ij[.] ||_2

by ADMM on the split Theta = Z, with the scaled dual U.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spectral import HermitianSpectrum, _hermitian

log = logging.getLogger(__name__)

ZERO_TOL = 1e-8


def _logdet_hpd(mats: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(mats)
    if np.any(w <= 0):
        raise ValueError("precision matrix is not positive definite")
    return np.sum(np.log(w), axis=-1)


def whittle_neg_loglik(theta: HermitianSpectrum, spectrum: HermitianSpectrum, L: int | None = None) -> float:
    """Negative Whittle log-likelihood  sum_n L [-log det Theta[n] + tr(f[n] Theta[n])]."""
    L = spectrum.window if L is None else L
    if theta.matrices.shape != spectrum.matrices.shape:
        raise ValueError("theta and spectrum shapes differ")
    logdet = _logdet_hpd(theta.matrices)
    tr = np.einsum("nij,nji->n", spectrum.matrices, theta.matrices).real
    return float(L * np.sum(tr - logdet))


def group_norms(mats: np.ndarray) -> np.ndarray:
    """K x K matrix of sqrt(sum_n |X_ij[n]|^2)."""
    return np.sqrt(np.sum(np.abs(mats) ** 2, axis=0))


def group_penalty(theta: HermitianSpectrum, lam: float) -> float:
    norms = group_norms(theta.matrices)
    np.fill_diagonal(norms, 0.0)
    return float(lam * norms.sum())


def objective(theta: HermitianSpectrum, spectrum: HermitianSpectrum, lam: float) -> float:
    return whittle_neg_loglik(theta, spectrum) + group_penalty(theta, lam)


def _theta_step(zu: np.ndarray, f: np.ndarray, rho: float, L: int) -> np.ndarray:
    c, V = np.linalg.eigh(_hermitian(rho * zu - L * f))
    ct = (c + np.sqrt(c * c + 4.0 * rho * L)) / (2.0 * rho)
    return _hermitian((V * ct[:, None, :]) @ np.conj(np.swapaxes(V, -1, -2)))


def _z_step(a: np.ndarray, theta_diag: np.ndarray, lam: float, rho: float) -> np.ndarray:
    K = a.shape[1]
    iu, ju = np.triu_indices(K, 1)
    grp = a[:, iu, ju]
    norms = np.sqrt(np.sum(grp.real ** 2 + grp.imag ** 2, axis=0))
    mu = lam / rho
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(norms > mu, 1.0 - mu / norms, 0.0)
    upper = grp * scale
    out = np.zeros_like(a)
    out[:, iu, ju] = upper
    out[:, ju, iu] = np.conj(upper)
    d = np.arange(K)
    out[:, d, d] = theta_diag
    return out


def theta_update(z: HermitianSpectrum, u: HermitianSpectrum, spectrum: HermitianSpectrum,
                 rho: float, L: int | None = None) -> HermitianSpectrum:
    """Closed-form minimizer of L(-log det T + tr(f T)) + rho/2 ||T - Z + U||_F^2 per frequency.

    With rho (Z - U) - L f = V diag(c) V^H the solution is
    V diag((c + sqrt(c^2 + 4 rho L)) / (2 rho)) V^H.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    L = spectrum.window if L is None else L
    zu = z.matrices - u.matrices
    if not (np.all(np.isfinite(zu)) and np.all(np.isfinite(spectrum.matrices))):
        raise ValueError("non-finite input to the Theta update")
    return spectrum.with_matrices(_theta_step(zu, spectrum.matrices, rho, L))


def z_update(theta: HermitianSpectrum, u: HermitianSpectrum, lam: float, rho: float) -> HermitianSpectrum:
    """Group soft-threshold of Theta + U per off-diagonal pair; diagonal copies Theta.

    U keeps a zero diagonal throughout, so Theta_ii equals Theta_ii + U_ii.
    """
    if rho <= 0 or lam < 0:
        raise ValueError("need rho > 0 and lam >= 0")
    diag = np.real(np.diagonal(theta.matrices, axis1=1, axis2=2))
    return theta.with_matrices(_z_step(theta.matrices + u.matrices, diag, lam, rho))


def support_of(z: HermitianSpectrum, tol: float = ZERO_TOL) -> np.ndarray:
    s = group_norms(z.matrices) > tol
    np.fill_diagonal(s, True)
    return s


@dataclass
class GlassoSolution:
    theta: HermitianSpectrum
    z: HermitianSpectrum
    support: np.ndarray
    lam: float
    rho: float
    window: int
    objective_trace: list = field(default_factory=list)
    primal_residuals: list = field(default_factory=list)
    dual_residuals: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0
    u: HermitianSpectrum | None = None

    @property
    def n_pairs(self) -> int:
        return int(np.triu(self.support, 1).sum())


def _diagonal_start(spectrum: HermitianSpectrum) -> np.ndarray:
    d = np.real(np.diagonal(spectrum.matrices, axis1=1, axis2=2))
    mats = np.zeros_like(spectrum.matrices)
    K = spectrum.K
    mats[:, np.arange(K), np.arange(K)] = 1.0 / np.maximum(d, 1e-300)
    return mats


def admm_solve(spectrum: HermitianSpectrum, lam: float, rho: float = 2.0, max_iter: int = 2000,
               tol_abs: float = 1e-6, tol_rel: float = 1e-4, warm_start: GlassoSolution | None = None,
               callback=None, track_objective: bool = False) -> GlassoSolution:
    """ADMM for the group-penalized Whittle problem.

    ``callback(k, theta, z, u)`` receives the raw (M, K, K) arrays after each
    iteration.  The returned support is read off Z, which carries exact zeros.
    """
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if rho <= 0:
        raise ValueError("rho must be positive")
    f = spectrum.matrices
    L = spectrum.window
    M, K = spectrum.M, spectrum.K
    sqrt_n = np.sqrt(M * K * K)
    if warm_start is not None:
        z = np.array(warm_start.z.matrices)
        u = np.array(warm_start.u.matrices) if warm_start.u is not None else np.zeros_like(f)
    else:
        z = _diagonal_start(spectrum)
        u = np.zeros_like(f)
    theta = z
    sol = GlassoSolution(spectrum, spectrum, np.eye(K, dtype=bool), float(lam), float(rho), L)
    r = s = np.inf
    k = 0
    for k in range(1, max_iter + 1):
        theta = _theta_step(z - u, f, rho, L)
        z_old = z
        z = _z_step(theta + u, np.real(np.diagonal(theta, axis1=1, axis2=2)), lam, rho)
        u = u + (theta - z)
        r = float(np.linalg.norm((theta - z).ravel()))
        s = float(rho * np.linalg.norm((z - z_old).ravel()))
        sol.primal_residuals.append(r)
        sol.dual_residuals.append(s)
        if track_objective:
            sol.objective_trace.append(objective(spectrum.with_matrices(theta), spectrum, lam))
        if callback is not None:
            callback(k, theta, z, u)
        eps_pri = sqrt_n * tol_abs + tol_rel * max(np.linalg.norm(theta.ravel()), np.linalg.norm(z.ravel()))
        eps_dual = sqrt_n * tol_abs + tol_rel * rho * np.linalg.norm(u.ravel())
        if r <= eps_pri and s <= eps_dual:
            sol.converged = True
            break
    if not sol.converged:
        log.warning("ADMM stopped after %d iterations (primal %.3g, dual %.3g)", k, r, s)
    sol.theta = spectrum.with_matrices(theta)
    sol.z = spectrum.with_matrices(z)
    sol.u = spectrum.with_matrices(u)
    sol.iterations = k
    sol.support = support_of(sol.z)
    return sol


def lambda_max(spectrum: HermitianSpectrum) -> float:
    """Smallest lam for which the diagonal precision is optimal.

    At Theta = diag(1/f_ii) the smooth gradient off the diagonal is L f_ij, so
    the diagonal point satisfies the optimality conditions exactly when
    lam >= L * max_{i != j} ||f_ij[.]||_2.
    """
    norms = group_norms(spectrum.matrices)
    np.fill_diagonal(norms, 0.0)
    return float(spectrum.window * norms.max(initial=0.0))


def default_lambda_grid(spectrum: HermitianSpectrum, n: int = 20, ratio: float = 1e-2) -> np.ndarray:
    """n log-spaced values from ratio * lambda_max up to lambda_max (ascending)."""
    hi = lambda_max(spectrum)
    if hi <= 0:
        return np.zeros(1)
    return np.geomspace(ratio * hi, hi, n)


def linear_lambda_grid(n: int = 20) -> np.ndarray:
    """n equally spaced values strictly inside (0, 1)."""
    return np.arange(1, n + 1) / (n + 1)


def nonzero_count(support: np.ndarray) -> int:
    """Nonzero entries of one precision matrix: both off-diagonal positions plus the diagonal."""
    return int(support.sum())


def information_criterion(sol: GlassoSolution, spectrum: HermitianSpectrum, criterion: str = "ebic",
                          gamma: float = 0.5) -> float:
    """AIC / eBIC of a path solution, counting nonzeros per frequency."""
    L, M, K = spectrum.window, spectrum.M, spectrum.K
    fit = whittle_neg_loglik(sol.theta, spectrum)
    E_total = M * nonzero_count(sol.support)
    criterion = criterion.lower()
    if criterion == "aic":
        return fit + 2.0 * E_total
    if criterion in ("ebic", "bic"):
        g = 0.0 if criterion == "bic" else gamma
        return fit + np.log(L) * E_total + 4.0 * E_total * g * np.log(K)
    raise ValueError(f"unknown criterion {criterion!r}")


@dataclass
class TuneResult:
    solution: GlassoSolution
    lambdas: np.ndarray
    criterion_values: np.ndarray
    criterion: str
    gamma: float
    n_pairs: list

    @property
    def best_lambda(self) -> float:
        return self.solution.lam


def tune(spectrum: HermitianSpectrum, lambdas: Sequence[float] | None = None, criterion: str = "ebic",
         gamma: float = 0.5, rho: float = 2.0, max_iter: int = 2000, tol_abs: float = 1e-6,
         tol_rel: float = 1e-4, warm_start: bool = True) -> TuneResult:
    """Solve over a lambda grid and keep the AIC / eBIC minimizer (ties go to the larger lambda).

    The grid is traversed from the largest lambda down, each solve warm-started
    from the previous (Z, U).
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    lambdas = default_lambda_grid(spectrum) if lambdas is None else np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("empty lambda grid")
    order = np.argsort(-lambdas, kind="stable")
    values = np.empty(lambdas.size)
    pairs = [0] * lambdas.size
    best, best_val = None, np.inf
    prev = first = None
    for idx in order:
        sol = admm_solve(spectrum, float(lambdas[idx]), rho, max_iter, tol_abs, tol_rel,
                         warm_start=prev if warm_start else None)
        prev = sol
        if first is None:
            first = sol
        values[idx] = information_criterion(sol, spectrum, criterion, gamma)
        pairs[idx] = sol.n_pairs
        if values[idx] < best_val:
            best, best_val = sol, values[idx]
    if best is None:
        # every criterion value was nan/inf; fall back to the largest lambda
        best = first
    return TuneResult(best, lambdas, values, criterion, gamma, pairs)
