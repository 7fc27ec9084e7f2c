"""Estimator accuracy metrics, forecast RMSE and directed-graph export."""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import TimeSeries
from .varmodel import VarModel, forecast


@dataclass(frozen=True)
class Metrics:
    bias2: float
    variance: float
    mse: float
    tpr: float
    fpr: float

    def as_row(self) -> dict:
        return {"Bias2": self.bias2, "Variance": self.variance, "MSE": self.mse, "TPR": self.tpr, "FPR": self.fpr}


def directed_edges(coeffs: np.ndarray) -> np.ndarray:
    """K x K boolean, [i, j] True iff A_k(i, j) != 0 for some k (self-loops dropped)."""
    e = np.any(np.asarray(coeffs) != 0, axis=0)
    e = e.copy()
    np.fill_diagonal(e, False)
    return e


def metrics(estimates: Sequence[VarModel], truth: VarModel) -> Metrics:
    """Bias^2, variance (divisor R), MSE and edge-level TPR/FPR averaged over the ensemble."""
    if len(estimates) == 0:
        raise ValueError("empty ensemble")
    K = truth.K
    if any(m.K != K for m in estimates):
        raise ValueError("estimate and truth dimensions differ")
    p = max(truth.p, max(m.p for m in estimates))
    est = np.stack([m.padded(p) for m in estimates])
    true = truth.padded(p)
    mean = est.mean(axis=0)
    bias2 = float(np.sum((mean - true) ** 2))
    variance = float(np.sum(np.mean((est - mean) ** 2, axis=0)))
    true_e = directed_edges(true)
    off = ~np.eye(K, dtype=bool)
    n_pos = true_e.sum()
    n_neg = (off & ~true_e).sum()
    tprs, fprs = [], []
    for A in est:
        e = directed_edges(A)
        tprs.append((e & true_e).sum() / n_pos if n_pos else np.nan)
        fprs.append((e & ~true_e & off).sum() / n_neg if n_neg else np.nan)
    return Metrics(bias2, variance, bias2 + variance, float(np.mean(tprs)), float(np.mean(fprs)))


def forecast_errors(model: VarModel, train: TimeSeries | np.ndarray, test: TimeSeries | np.ndarray,
                    h: int) -> np.ndarray:
    """h-step forecast errors at each rolling origin in the test window, shape (T_test - h + 1, K).

    Origins run from the last training point to the point h steps before the
    end of the test window, each forecast using all data up to the origin.
    """
    tr = train.values if isinstance(train, TimeSeries) else np.asarray(train, float)
    te = test.values if isinstance(test, TimeSeries) else np.asarray(test, float)
    T_test = te.shape[0]
    if h < 1 or h > T_test:
        raise ValueError(f"horizon {h} outside 1..{T_test}")
    full = np.vstack([tr, te])
    T = tr.shape[0]
    errs = [forecast(model, full[:origin], h)[-1] - full[origin + h - 1]
            for origin in range(T, T + T_test - h + 1)]
    return np.asarray(errs)


def rmse_h(model: VarModel, train: TimeSeries | np.ndarray, test: TimeSeries | np.ndarray, h: int) -> float:
    """Root mean squared h-step error over series and rolling origins."""
    return float(np.sqrt(np.mean(forecast_errors(model, train, test, h) ** 2)))


def _dot_id(name: str) -> str:
    if re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", name):
        return name
    return '"' + name.replace('"', '\\"') + '"'


def export_digraph(model: VarModel | np.ndarray, names: Sequence[str] | None = None,
                   weights: np.ndarray | None = None, name: str = "var") -> str:
    """DOT digraph with an edge i -> j whenever some A_k(i, j) is nonzero.

    ``weights`` (K x K) adds a ``weight`` attribute, e.g. detection frequencies
    across replicates; edges are then drawn where the weight is positive.
    """
    coeffs = model.coeffs if isinstance(model, VarModel) else np.asarray(model)
    K = coeffs.shape[1]
    names = [f"Y{k + 1}" for k in range(K)] if names is None else list(names)
    if weights is not None:
        edges = np.asarray(weights) > 0
        np.fill_diagonal(edges, False)
    else:
        edges = directed_edges(coeffs)
    lines = [f"digraph {_dot_id(name)} {{"]
    for k in range(K):
        lines.append(f"  {_dot_id(names[k])};")
    pairs = sorted((i, j) for i in range(K) for j in range(K) if edges[i, j])
    for i, j in pairs:
        attr = f" [weight={float(weights[i, j]):.4g}]" if weights is not None else ""
        lines.append(f"  {_dot_id(names[i])} -> {_dot_id(names[j])}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def edge_frequencies(estimates: Sequence[VarModel]) -> np.ndarray:
    """Fraction of estimates in which each directed edge is present."""
    return np.mean([directed_edges(m.coeffs) for m in estimates], axis=0)
