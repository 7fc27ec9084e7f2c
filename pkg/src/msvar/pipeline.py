"""End-to-end sparse VAR fitting: the PSC/t-ratio pipeline and the TSGlasso/FDR pipeline."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import tsglasso
from .psc import psc_by_inversion
from .restricted import RestrictedFit, bic, fit_restricted
from .spectral import TimeSeries, sample_spectrum
from .varmodel import SupportMask, VarModel

log = logging.getLogger(__name__)


def bh_fdr(p_values: Sequence[float], q: float, dependent: bool = False) -> np.ndarray:
    """Benjamini-Hochberg step-up; returns the rejected indices in input order.

    With ``dependent=True`` the level is divided by sum_{i<=N} 1/i
    (Benjamini-Yekutieli), valid under arbitrary dependence.
    """
    p = np.asarray(p_values, dtype=float).reshape(-1)
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    N = p.size
    if N == 0:
        return np.zeros(0, dtype=int)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("p-values must lie in [0, 1]")
    level = q / np.sum(1.0 / np.arange(1, N + 1)) if dependent else q
    order = np.argsort(p, kind="stable")
    below = p[order] <= level * np.arange(1, N + 1) / N
    if not below.any():
        return np.zeros(0, dtype=int)
    k = int(np.flatnonzero(below).max()) + 1
    return np.sort(order[:k])


@dataclass
class FitReport:
    method: str
    final_model: VarModel
    selected_p: int
    selected_pairs: int
    final_nonzeros: int
    stage1_support: SupportMask
    stage2_support: SupportMask
    stage1_model: VarModel
    bic_trace: list = field(default_factory=list)  # [[p, M, value]] or [[p, value]]
    refinement_trace: list = field(default_factory=list)  # sVAR: [[m, BIC(m)]]; msVAR: rejected triplets
    tuning_trace: dict | None = None
    fdr_q: float | None = None
    flags: list = field(default_factory=list)
    wall_time: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "final_model": self.final_model.to_dict(),
            "selected_p": self.selected_p,
            "selected_pairs": self.selected_pairs,
            "final_nonzeros": self.final_nonzeros,
            "stage1_support": self.stage1_support.to_dict(),
            "stage2_support": self.stage2_support.to_dict(),
            "stage1_model": self.stage1_model.to_dict(),
            "bic_trace": self.bic_trace,
            "refinement_trace": self.refinement_trace,
            "tuning_trace": self.tuning_trace,
            "fdr_q": self.fdr_q,
            "flags": self.flags,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(
            method=d["method"],
            final_model=VarModel.from_dict(d["final_model"]),
            selected_p=int(d["selected_p"]),
            selected_pairs=int(d["selected_pairs"]),
            final_nonzeros=int(d["final_nonzeros"]),
            stage1_support=SupportMask.from_dict(d["stage1_support"]),
            stage2_support=SupportMask.from_dict(d["stage2_support"]),
            stage1_model=VarModel.from_dict(d["stage1_model"]),
            bic_trace=[list(x) for x in d.get("bic_trace", [])],
            refinement_trace=[list(x) for x in d.get("refinement_trace", [])],
            tuning_trace=d.get("tuning_trace"),
            fdr_q=d.get("fdr_q"),
            flags=list(d.get("flags", [])),
            wall_time=dict(d.get("wall_time", {})),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FitReport":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


def _pair_mask(K: int, pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    m = np.eye(K, dtype=bool)
    for i, j in pairs:
        m[i, j] = m[j, i] = True
    return m


def _ranked_triplets(fit: RestrictedFit) -> list[tuple[int, int, int]]:
    """Free coefficients by descending |t|; ties by (i, j, k)."""
    trip = sorted(fit.free_coefficients())
    return sorted(trip, key=lambda c: -abs(fit.t_stats[c[2] - 1, c[0], c[1]]))


def _support_from_triplets(K: int, p: int, triplets) -> SupportMask:
    cs = np.zeros((p, K, K), dtype=bool)
    for i, j, k in triplets:
        cs[k - 1, i, j] = True
    return SupportMask(cs)


def svar_fit(data: TimeSeries, p_grid: Sequence[int] = (1, 2, 3), m_grid: Sequence[int] | None = None,
             half_window: int | None = None) -> FitReport:
    """Two-stage sparse VAR: PSC screening with a BIC(p, M) grid, then t-ratio pruning with BIC(m)."""
    K = data.K
    p_grid = sorted(set(int(p) for p in p_grid))
    if not p_grid:
        raise ValueError("empty lag grid")
    p_max = max(p_grid)
    n_pairs_max = K * (K - 1) // 2
    m_grid = list(range(n_pairs_max + 1)) if m_grid is None else sorted(set(int(m) for m in m_grid))
    if not m_grid:
        raise ValueError("empty pair-count grid")
    m_grid = [m for m in m_grid if 0 <= m <= n_pairs_max] or [0]
    n_obs = data.T - p_max
    t0 = time.perf_counter()

    if K > 1:
        surface = psc_by_inversion(sample_spectrum(data, half_window))
        ranked = surface.ranked_pairs()
    else:
        ranked = []
    best = None
    trace = []
    for p in p_grid:
        for M in m_grid:
            support = SupportMask.from_pairs(_pair_mask(K, ranked[:M]), p)
            fit = fit_restricted(data, p, support, presample=p_max, std_errors=False)
            value = bic(fit, n_obs, (K + 2 * M) * p)
            trace.append([p, M, value])
            if best is None or value < best[0]:
                best = (value, p, M, fit)
    _, p_star, M_star, stage1 = best
    # only the selected fit needs t-ratios
    stage1 = fit_restricted(data, p_star, stage1.support, presample=p_max)
    t1 = time.perf_counter()

    triplets = _ranked_triplets(stage1)
    best2 = None
    trace2 = []
    for m in range(len(triplets) + 1):
        support = _support_from_triplets(K, p_star, triplets[:m])
        fit = fit_restricted(data, p_star, support, presample=p_max, std_errors=False)
        value = bic(fit, n_obs, m)
        trace2.append([m, value])
        if best2 is None or value < best2[0]:
            best2 = (value, m, fit)
    _, m_star, final = best2
    t2 = time.perf_counter()
    return FitReport(
        method="svar", final_model=final.model, selected_p=p_star, selected_pairs=M_star,
        final_nonzeros=final.support.n_free, stage1_support=stage1.support, stage2_support=final.support,
        stage1_model=stage1.model, bic_trace=trace, refinement_trace=trace2,
        wall_time={"stage1": t1 - t0, "stage2": t2 - t1},
    )


@dataclass
class GlassoConfig:
    lam: float | None = None  # fixed lambda; None means tune over the grid
    # "linear": 20 equally spaced values in (0, 1); "log": 20 values down from lambda_max
    lambda_grid: Sequence[float] | str | None = "linear"
    criterion: str = "ebic"
    gamma: float = 0.5
    rho: float = 2.0
    max_iter: int = 2000
    tol_abs: float = 1e-6
    tol_rel: float = 1e-4
    half_window: int | None = None

    @classmethod
    def from_dict(cls, d: dict) -> "GlassoConfig":
        d = dict(d)
        if "lambda" in d:
            d["lam"] = d.pop("lambda")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown solver options: {sorted(unknown)}")
        return cls(**d)


def stage1_glasso(data: TimeSeries, config: GlassoConfig) -> tuple[np.ndarray, dict]:
    spectrum = sample_spectrum(data, config.half_window)
    if config.lam is not None:
        sol = tsglasso.admm_solve(spectrum, float(config.lam), config.rho, config.max_iter,
                                  config.tol_abs, config.tol_rel)
        return sol.support, {"lambda": sol.lam, "iterations": sol.iterations, "converged": sol.converged}
    grid = config.lambda_grid
    if grid is None or (isinstance(grid, str) and grid == "linear"):
        lambdas = tsglasso.linear_lambda_grid()
    elif isinstance(grid, str) and grid == "log":
        lambdas = tsglasso.default_lambda_grid(spectrum)
    elif isinstance(grid, str):
        raise ValueError(f"unknown lambda grid preset {grid!r}")
    else:
        lambdas = np.asarray(grid, dtype=float)
    res = tsglasso.tune(spectrum, lambdas, config.criterion, config.gamma, config.rho, config.max_iter,
                        config.tol_abs, config.tol_rel)
    trace = {
        "lambda": res.best_lambda,
        "criterion": res.criterion,
        "gamma": res.gamma,
        "lambdas": res.lambdas.tolist(),
        "values": res.criterion_values.tolist(),
        "pairs": list(res.n_pairs),
    }
    return res.solution.support, trace


def msvar_fit(data: TimeSeries, p_grid: Sequence[int] = (1, 2, 3), q: float = 0.1,
              config: GlassoConfig | None = None, dependent_fdr: bool = False) -> FitReport:
    """TSGlasso screening with a single BIC(p) lag choice, then BH-FDR pruning and a refit."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    config = GlassoConfig() if config is None else config
    K = data.K
    p_grid = sorted(set(int(p) for p in p_grid))
    if not p_grid:
        raise ValueError("empty lag grid")
    p_max = max(p_grid)
    n_obs = data.T - p_max
    t0 = time.perf_counter()

    if K > 1:
        pair_support, tuning = stage1_glasso(data, config)
    else:
        pair_support, tuning = np.ones((1, 1), dtype=bool), None
    M_star = int(np.triu(pair_support, 1).sum())
    best = None
    trace = []
    for p in p_grid:
        fit = fit_restricted(data, p, SupportMask.from_pairs(pair_support, p), presample=p_max, std_errors=False)
        value = bic(fit, n_obs, (K + 2 * M_star) * p)
        trace.append([p, value])
        if best is None or value < best[0]:
            best = (value, p, fit)
    _, p_star, stage1 = best
    stage1 = fit_restricted(data, p_star, stage1.support, presample=p_max)
    t1 = time.perf_counter()

    triplets = sorted(stage1.free_coefficients())
    pvals = [stage1.p_values[k - 1, i, j] for i, j, k in triplets]
    rejected = bh_fdr(pvals, q, dependent=dependent_fdr)
    keep = [triplets[r] for r in rejected]
    flags = []
    if not keep:
        flags.append("fdr_rejected_nothing")
    support2 = _support_from_triplets(K, p_star, keep)
    final = fit_restricted(data, p_star, support2, presample=p_max, std_errors=False)
    t2 = time.perf_counter()
    return FitReport(
        method="msvar", final_model=final.model, selected_p=p_star, selected_pairs=M_star,
        final_nonzeros=support2.n_free, stage1_support=stage1.support, stage2_support=support2,
        stage1_model=stage1.model, bic_trace=trace, refinement_trace=[list(t) for t in keep],
        tuning_trace=tuning, fdr_q=q, flags=flags, wall_time={"stage1": t1 - t0, "stage2": t2 - t1},
    )
