"""DFT of multivariate series and locally smoothed spectral density matrices."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class TimeSeries:
    """T x K block of real observations (rows are time points)."""

    values: np.ndarray
    series_names: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise ValueError("values must be a T x K matrix")
        T, K = values.shape
        if T < 2 or K < 1:
            raise ValueError(f"need T >= 2 and K >= 1, got T={T}, K={K}")
        if not np.all(np.isfinite(values)):
            raise ValueError("time series contains non-finite entries")
        values.setflags(write=False)
        names = tuple(self.series_names) or tuple(f"Y{k + 1}" for k in range(K))
        if len(names) != K:
            raise ValueError(f"{len(names)} series names for {K} series")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "series_names", names)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def K(self) -> int:
        return self.values.shape[1]

    def head(self, n: int) -> "TimeSeries":
        return TimeSeries(self.values[:n], self.series_names)

    def tail(self, n: int) -> "TimeSeries":
        return TimeSeries(self.values[-n:], self.series_names)


def read_csv(path: str | Path) -> TimeSeries:
    """Read a header-plus-rows CSV, one column per series."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValueError(f"{path}: expected a header and at least one row")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(x) for x in row] for row in rows[1:] if row], dtype=float)
    return TimeSeries(data, tuple(header))


def write_csv(series: TimeSeries, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(series.series_names)
        for row in series.values:
            writer.writerow([repr(float(x)) for x in row])


@dataclass(frozen=True)
class DftFrame:
    """Normalized DFT at the retained Fourier frequencies n = 1 .. T/2 - 1."""

    coefficients: np.ndarray  # (n_freq, K) complex
    frequencies: np.ndarray  # n / T
    T: int

    @property
    def K(self) -> int:
        return self.coefficients.shape[1]


def _hermitian(x: np.ndarray) -> np.ndarray:
    # (X + X^H)/2 is exactly Hermitian in floating point: the two triangles are
    # computed from the same operands in commuted order.
    return 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))


@dataclass(frozen=True)
class HermitianSpectrum:
    """A stack of M complex Hermitian K x K matrices indexed by scaled frequency.

    Used for sample spectra as well as the ADMM iterates (precision, split
    variable and scaled dual), so positive definiteness is not enforced here.
    """

    matrices: np.ndarray
    frequencies: np.ndarray
    window: int = 1

    def __post_init__(self):
        mats = np.array(self.matrices, dtype=complex)
        if mats.ndim == 2:
            mats = mats[None]
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2]:
            raise ValueError("matrices must have shape (M, K, K)")
        freqs = np.asarray(self.frequencies, dtype=float).reshape(-1)
        if freqs.shape[0] != mats.shape[0]:
            raise ValueError("one frequency per matrix required")
        mats = _hermitian(mats)
        mats.setflags(write=False)
        freqs.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "window", int(self.window))

    @property
    def M(self) -> int:
        return self.matrices.shape[0]

    @property
    def K(self) -> int:
        return self.matrices.shape[1]

    def with_matrices(self, matrices: np.ndarray) -> "HermitianSpectrum":
        return HermitianSpectrum(matrices, self.frequencies, self.window)

    def inverse(self) -> "HermitianSpectrum":
        return self.with_matrices(np.linalg.inv(self.matrices))

    def max_asymmetry(self) -> float:
        m = self.matrices
        return float(np.max(np.abs(m - np.conj(np.swapaxes(m, -1, -2))), initial=0.0))


def full_dft(values: np.ndarray) -> np.ndarray:
    """Normalized DFT over all n = 0..T-1 (rows), 1/sqrt(T) scaling."""
    values = np.asarray(values, dtype=float)
    return np.fft.fft(values, axis=0) / np.sqrt(values.shape[0])


def dft(series: TimeSeries) -> DftFrame:
    """Normalized DFT at n = 1 .. T/2 - 1 (odd T loses its last observation)."""
    values = series.values
    if values.shape[0] < 4:
        raise ValueError(f"series too short for a DFT: T={values.shape[0]} < 4")
    T = values.shape[0] - values.shape[0] % 2
    d = full_dft(values[:T])
    n = np.arange(1, T // 2)
    return DftFrame(coefficients=d[n], frequencies=n / T, T=T)


def default_half_window(K: int) -> int:
    """Smallest half-window m_t whose span 2 m_t + 1 is at least K + 1."""
    return max(0, int(np.ceil(K / 2)))


def n_smoothed_frequencies(T: int, half_window: int) -> int:
    L = 2 * half_window + 1
    return int(np.floor((T / 2 - half_window - 1) / L))


def smoothed_spectrum(frames: DftFrame, half_window: int | None = None) -> HermitianSpectrum:
    """Average d d^H over non-overlapping windows of L = 2 m_t + 1 Fourier frequencies.

    Window l (1-based) is centred on Fourier index (l - 1) L + m_t + 1.
    """
    K = frames.K
    m_t = default_half_window(K) if half_window is None else int(half_window)
    if m_t < 0:
        raise ValueError("half_window must be non-negative")
    L = 2 * m_t + 1
    if L < K:
        raise ValueError(f"smoothing span L={L} is smaller than K={K}; increase the half-window")
    T = frames.T
    M = n_smoothed_frequencies(T, m_t)
    if M < 1:
        raise ValueError(f"series of length T={T} too short for half-window {m_t} (no smoothed frequencies)")
    centers = (np.arange(M) * L + m_t + 1)
    # frames.coefficients[0] is Fourier index 1
    idx = centers[:, None] + np.arange(-m_t, m_t + 1)[None, :] - 1
    d = frames.coefficients[idx]  # (M, L, K)
    mats = np.einsum("mlk,mlj->mkj", d, np.conj(d)) / L
    return HermitianSpectrum(mats, centers / T, L)


def sample_spectrum(series: TimeSeries, half_window: int | None = None) -> HermitianSpectrum:
    return smoothed_spectrum(dft(series), half_window)
