"""Monte Carlo benchmark harness: simulate, fit each method, aggregate metrics."""
from __future__ import annotations

import csv
import json
import logging
import multiprocessing
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .evaluation import edge_frequencies, export_digraph, metrics, rmse_h
from .fixtures import get_fixture, random_sparse
from .pipeline import FitReport, GlassoConfig, msvar_fit, svar_fit
from .spectral import TimeSeries
from .varmodel import VarModel, simulate

log = logging.getLogger(__name__)

METHODS = ("svar", "msvar", "msvar-stage1")


@dataclass
class BenchConfig:
    fixture: str = "model1"
    reps: int = 50
    T: int = 100
    seed: int = 0
    methods: Sequence[str] = ("svar", "msvar")
    p_grid: Sequence[int] = (1, 2, 3)
    q: float = 0.1
    glasso: GlassoConfig = field(default_factory=GlassoConfig)
    half_window: int | None = None  # sVAR smoothing; msVAR uses glasso.half_window
    burn_in: int = 500
    threads: int | None = None
    # random-sparse fixture
    K: int = 25
    density: float = 0.25
    # forecasting evaluation (0 disables)
    test_size: int = 0
    horizons: int = 4

    @classmethod
    def from_dict(cls, d: dict) -> "BenchConfig":
        d = dict(d)
        if "glasso" in d:
            d["glasso"] = GlassoConfig.from_dict(d["glasso"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown bench options: {sorted(unknown)}")
        return cls(**d)

    def truth(self) -> VarModel:
        if self.fixture == "random-sparse":
            return random_sparse(self.K, self.density, p=1, seed=self.seed)
        return get_fixture(self.fixture)


def load_config(path: str | Path) -> dict:
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        return tomllib.loads(text)
    return json.loads(text)


@dataclass
class ReplicateResult:
    replicate: int
    reports: dict  # method -> FitReport
    errors: dict  # method -> message
    rmse: dict  # method -> list over h


@dataclass
class BenchmarkResult:
    config: BenchConfig
    truth: VarModel
    metrics: dict  # method -> Metrics
    replicates: list
    edge_freq: dict  # method -> K x K
    rmse: dict  # method -> (mean per h, sd per h)
    failures: dict  # method -> count
    wall_time: dict  # method -> mean seconds per fit

    def metric_rows(self) -> list[dict]:
        rows = []
        for m, met in self.metrics.items():
            row = {"method": m, "model": self.config.fixture}
            row.update(met.as_row())
            rows.append(row)
        return rows


def _fit(method: str, data: TimeSeries, cfg: BenchConfig) -> FitReport:
    if method == "svar":
        return svar_fit(data, cfg.p_grid, half_window=cfg.half_window)
    if method in ("msvar", "msvar-stage1"):
        return msvar_fit(data, cfg.p_grid, cfg.q, cfg.glasso)
    raise ValueError(f"unknown method {method!r}")


def run_replicate(cfg: BenchConfig, truth: VarModel, r: int) -> ReplicateResult:
    total = cfg.T + cfg.test_size
    data = simulate(truth, total, cfg.burn_in, seed=[cfg.seed, r])
    train = TimeSeries(data.values[:cfg.T], data.series_names)
    reports, errors, rmse = {}, {}, {}
    cache = {}
    for method in cfg.methods:
        base = "msvar" if method == "msvar-stage1" else method
        try:
            if base not in cache:
                cache[base] = _fit(base, train, cfg)
            reports[method] = cache[base]
        except Exception as exc:  # recorded per replicate, not fatal
            errors[method] = f"{type(exc).__name__}: {exc}"
            continue
        if cfg.test_size:
            model = reports[method].stage1_model if method == "msvar-stage1" else reports[method].final_model
            test = data.values[cfg.T:]
            rmse[method] = [rmse_h(model, train, test, h) for h in range(1, cfg.horizons + 1)]
    return ReplicateResult(r, reports, errors, rmse)


def _worker(args):
    import threadpoolctl

    cfg, truth, r = args
    with threadpoolctl.threadpool_limits(1):
        return run_replicate(cfg, truth, r)


def run_bench(cfg: BenchConfig) -> BenchmarkResult:
    for m in cfg.methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
    truth = cfg.truth()
    threads = cfg.threads or os.cpu_count() or 1
    jobs = [(cfg, truth, r) for r in range(cfg.reps)]
    if threads > 1 and cfg.reps > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            reps = list(ex.map(_worker, jobs))
    else:
        reps = [run_replicate(cfg, truth, r) for r in range(cfg.reps)]
    reps.sort(key=lambda x: x.replicate)

    out_metrics, freq, rmse, failures, times = {}, {}, {}, {}, {}
    for m in cfg.methods:
        models = []
        for rep in reps:
            if m in rep.reports:
                rpt = rep.reports[m]
                models.append(rpt.stage1_model if m == "msvar-stage1" else rpt.final_model)
        failures[m] = sum(m in rep.errors for rep in reps)
        if models:
            out_metrics[m] = metrics(models, truth)
            freq[m] = edge_frequencies(models)
        times[m] = float(np.mean([sum(rep.reports[m].wall_time.values()) for rep in reps if m in rep.reports]
                                 or [np.nan]))
        if cfg.test_size:
            vals = np.array([rep.rmse[m] for rep in reps if m in rep.rmse])
            if vals.size:
                rmse[m] = (vals.mean(axis=0), vals.std(axis=0))
    return BenchmarkResult(cfg, truth, out_metrics, reps, freq, rmse, failures, times)


def write_outputs(result: BenchmarkResult, out_dir: str | Path, save_reports: bool = True) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    path = out / "metrics.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, ["method", "model", "Bias2", "Variance", "MSE", "TPR", "FPR"])
        w.writeheader()
        for row in result.metric_rows():
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    written.append(path)
    for m, f in result.edge_freq.items():
        path = out / f"graph_{m}.dot"
        path.write_text(export_digraph(np.zeros((1,) + f.shape), weights=f, name=f"{result.config.fixture}_{m}"))
        written.append(path)
    path = out / "graph_truth.dot"
    path.write_text(export_digraph(result.truth, name=f"{result.config.fixture}_truth"))
    written.append(path)
    if result.rmse:
        path = out / "rmse.csv"
        H = result.config.horizons
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method"] + [f"h{h}" for h in range(1, H + 1)] + [f"h{h}_sd" for h in range(1, H + 1)])
            for m, (mean, sd) in result.rmse.items():
                w.writerow([m] + [repr(float(x)) for x in mean] + [repr(float(x)) for x in sd])
        written.append(path)
    if save_reports:
        rdir = out / "reports"
        rdir.mkdir(exist_ok=True)
        for rep in result.replicates:
            for m, rpt in rep.reports.items():
                if m == "msvar-stage1":
                    continue
                p = rdir / f"{m}_rep{rep.replicate:03d}.json"
                rpt.save(p)
        failures = {f"rep{rep.replicate:03d}": rep.errors for rep in result.replicates if rep.errors}
        if failures:
            (out / "failures.json").write_text(json.dumps(failures, indent=2))
    return written


@dataclass
class TimingResult:
    K: int
    seconds: dict  # method -> wall seconds
    ratios: dict  # method -> seconds / msvar-fixed seconds
    censored: tuple = ()  # methods stopped at their time limit; seconds is then a lower bound


def _timed_svar(data: TimeSeries, half_window: int | None, limit: float | None) -> tuple[float, bool]:
    """Wall time of svar_fit, run in a child process and stopped after ``limit`` seconds."""
    t0 = time.perf_counter()
    if limit is None:
        svar_fit(data, (1,), half_window=half_window)
        return time.perf_counter() - t0, False
    proc = multiprocessing.Process(target=svar_fit, args=(data, (1,)), kwargs={"half_window": half_window})
    proc.start()
    proc.join(limit)
    if proc.is_alive():
        proc.terminate()
        proc.join()
        return limit, True
    return time.perf_counter() - t0, False


def run_timing(K: int, T: int = 500, density: float = 0.25, seed: int = 0, fixed_lambda: float = 0.2,
               lambda_grid: str | Sequence[float] = "linear", half_window: int | None = None,
               methods: Sequence[str] = ("msvar-tuned", "msvar-fixed", "svar"),
               svar_limit: float | None = None) -> TimingResult:
    """Wall time of one fit per method on a random sparse VAR(1); ratios against fixed-lambda msVAR.

    ``svar_limit`` stops sVAR once it has run that many times the msVAR-fixed
    time (msVAR-fixed is then timed first); the reported sVAR time is a lower bound.
    """
    truth = random_sparse(K, density, p=1, seed=seed)
    data = simulate(truth, T, seed=[seed, 0])
    for m in methods:
        if m not in ("msvar-tuned", "msvar-fixed", "svar"):
            raise ValueError(f"unknown timing method {m!r}")
    if svar_limit is not None:
        if "msvar-fixed" not in methods:
            raise ValueError("svar_limit needs msvar-fixed among the methods")
        methods = sorted(methods, key=lambda m: m == "svar")
    seconds, censored = {}, []
    for m in methods:
        t0 = time.perf_counter()
        if m == "svar":
            limit = None if svar_limit is None else svar_limit * seconds["msvar-fixed"]
            seconds[m], stopped = _timed_svar(data, half_window, limit)
            if stopped:
                censored.append(m)
            continue
        if m == "msvar-fixed":
            msvar_fit(data, (1,), 0.1, GlassoConfig(lam=fixed_lambda, half_window=half_window))
        else:
            msvar_fit(data, (1,), 0.1, GlassoConfig(lambda_grid=lambda_grid, half_window=half_window))
        seconds[m] = time.perf_counter() - t0
    base = seconds.get("msvar-fixed")
    ratios = {m: s / base for m, s in seconds.items()} if base else {}
    return TimingResult(K, seconds, ratios, tuple(censored))
