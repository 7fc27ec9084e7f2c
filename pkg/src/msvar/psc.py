"""Partial spectral coherence and the AR inverse-spectrum diagnostic."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import HermitianSpectrum
from .varmodel import VarModel


@dataclass(frozen=True)
class PscSurface:
    """PSC_ij at each estimated frequency plus the S_ij = max_n |PSC_ij[n]|^2 summary."""

    values: np.ndarray  # (M, K, K) complex, zero diagonal
    frequencies: np.ndarray
    summary: np.ndarray  # (K, K) real symmetric

    @property
    def modulus2(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def ranked_pairs(self) -> list[tuple[int, int]]:
        """Pairs i < j by descending S_ij; ties fall back to (i, j) order."""
        K = self.summary.shape[0]
        pairs = [(i, j) for i in range(K) for j in range(i + 1, K)]
        return sorted(pairs, key=lambda ij: -self.summary[ij])

    def to_csv(self, path: str | Path) -> None:
        M, K, _ = self.values.shape
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["frequency", "i", "j", "re", "im", "modulus2"])
            for n in range(M):
                for i in range(K):
                    for j in range(K):
                        if i == j:
                            continue
                        v = self.values[n, i, j]
                        w.writerow([repr(float(self.frequencies[n])), i + 1, j + 1,
                                    repr(float(v.real)), repr(float(v.imag)), repr(float(abs(v) ** 2))])


def psc_from_precision(theta: HermitianSpectrum) -> PscSurface:
    """PSC_ij = -Theta_ij / sqrt(Theta_ii Theta_jj) per frequency."""
    mats = theta.matrices
    d = np.real(np.diagonal(mats, axis1=1, axis2=2))
    if np.any(d <= 0):
        raise ValueError("precision matrices must have a strictly positive diagonal")
    s = np.sqrt(d)
    values = -mats / (s[:, :, None] * s[:, None, :])
    K = theta.K
    values[:, np.arange(K), np.arange(K)] = 0.0
    summary = np.max(np.abs(values) ** 2, axis=0)
    summary = np.maximum(summary, summary.T)
    return PscSurface(values, np.array(theta.frequencies), summary)


def psc_by_inversion(spectrum: HermitianSpectrum, max_condition: float = 1e12) -> PscSurface:
    cond = np.linalg.cond(spectrum.matrices)
    if not np.all(np.isfinite(cond)) or np.any(cond >= max_condition):
        worst = float(np.max(cond)) if np.all(np.isfinite(cond)) else float("inf")
        raise ValueError(f"spectral matrix is ill-conditioned (condition number {worst:.3g}); "
                         "try a larger smoothing half-window")
    return psc_from_precision(spectrum.inverse())


def residual_cross_spectrum(spectrum: HermitianSpectrum, i: int, j: int) -> np.ndarray:
    """Cross-spectrum of i and j after removing the linear effect of all other series."""
    K = spectrum.K
    if K < 3:
        raise ValueError("need at least three series")
    if i == j:
        raise ValueError("i and j must differ")
    rest = [k for k in range(K) if k not in (i, j)]
    f = spectrum.matrices
    f_rr = f[:, rest][:, :, rest]
    try:
        sol = np.linalg.solve(f_rr, f[:, rest][:, :, [j]])
    except np.linalg.LinAlgError:
        raise ValueError("singular sub-block of the spectral matrix") from None
    return f[:, i, j] - (f[:, [i]][:, :, rest] @ sol)[:, 0, 0]


def psc_from_residuals(spectrum: HermitianSpectrum, i: int, j: int) -> np.ndarray:
    """PSC_ij as the coherence of the residual spectra (independent of the inverse route)."""
    f_ij = residual_cross_spectrum(spectrum, i, j)
    f_ii = residual_cross_spectrum_diag(spectrum, i, j)
    f_jj = residual_cross_spectrum_diag(spectrum, j, i)
    return f_ij / np.sqrt(f_ii * f_jj)


def residual_cross_spectrum_diag(spectrum: HermitianSpectrum, i: int, j: int) -> np.ndarray:
    """Residual auto-spectrum of series i given everything except i and j."""
    K = spectrum.K
    rest = [k for k in range(K) if k not in (i, j)]
    f = spectrum.matrices
    f_rr = f[:, rest][:, :, rest]
    sol = np.linalg.solve(f_rr, f[:, rest][:, :, [i]])
    return np.real(f[:, i, i] - (f[:, [i]][:, :, rest] @ sol)[:, 0, 0])


@dataclass(frozen=True)
class ArInverseSpectrum:
    spectrum: HermitianSpectrum
    xk: np.ndarray  # (p + 1, K, K), X_0 .. X_p
    exact_zero_pairs: np.ndarray  # (K, K) bool, True where Theta^Y_ij(w) == 0 for all w

    def pair_max_abs(self, i: int, j: int) -> float:
        """Largest |(X_k)_ij| or |(X_k)_ji| over k; zero iff the pair's PSC vanishes identically."""
        return float(max(np.max(np.abs(self.xk[:, i, j])), np.max(np.abs(self.xk[:, j, i]))))


def xk_matrices(model: VarModel) -> np.ndarray:
    """X_k = sum_{i=0}^{p-k} A_i^T Theta_u A_{i+k}, with A_0 = I and A_i = -A_i^model.

    The sign flip puts the model in the form A(z) = I + z^-1 A_1 + ... used by
    the trigonometric-polynomial expansion; it cancels in every product with
    an even number of lag factors and only changes signs, never zeros.
    """
    try:
        prec = np.linalg.inv(model.noise_cov)
    except np.linalg.LinAlgError:
        raise ValueError("noise covariance is singular") from None
    prec = 0.5 * (prec + prec.T)
    K, p = model.K, model.p
    A = [np.eye(K)] + [-a for a in model.coeffs]
    return np.stack([sum(A[i].T @ prec @ A[i + k] for i in range(p - k + 1)) for k in range(p + 1)])


def ar_inverse_spectrum(model: VarModel, frequencies=None, tol: float = 1e-10) -> ArInverseSpectrum:
    """Inverse spectrum of a VAR as X_0 + sum_k (e^{-ikw} X_k + e^{ikw} X_k^T).

    ``frequencies`` are scaled (cycles per sample); w = 2 pi * frequency.
    """
    stable = np.max(np.abs(np.linalg.eigvals(model.companion()))) < 1
    if not stable:
        raise ValueError("model is not stable")
    X = xk_matrices(model)
    freqs = np.linspace(0, 0.5, 65) if frequencies is None else np.asarray(frequencies, float)
    w = 2 * np.pi * freqs
    mats = np.broadcast_to(X[0].astype(complex), (w.size,) + X[0].shape).copy()
    for k in range(1, model.p + 1):
        e = np.exp(-1j * k * w)[:, None, None]
        mats += e * X[k] + np.conj(e) * X[k].T
    zero = np.all(np.abs(X) <= tol, axis=0) & np.all(np.abs(np.swapaxes(X, 1, 2)) <= tol, axis=0)
    np.fill_diagonal(zero, False)
    return ArInverseSpectrum(HermitianSpectrum(mats, freqs, 1), X, zero)


def transfer_spectrum(model: VarModel, frequencies) -> np.ndarray:
    """f(w) = A(e^{-iw})^{-1} Sigma A(e^{-iw})^{-H} with A(z) = I - sum A_k z^k (2 pi factor dropped)."""
    w = 2 * np.pi * np.asarray(frequencies, float)
    K = model.K
    out = []
    for wi in w:
        Az = np.eye(K, dtype=complex)
        for k in range(model.p):
            Az -= model.coeffs[k] * np.exp(-1j * (k + 1) * wi)
        Ainv = np.linalg.inv(Az)
        out.append(Ainv @ model.noise_cov @ Ainv.conj().T)
    return np.array(out)
