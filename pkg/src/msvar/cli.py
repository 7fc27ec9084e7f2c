"""Command-line front end: simulate, fit, forecast, bench, export-graph."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .bench import BenchConfig, load_config, run_bench, run_timing, write_outputs
from .evaluation import export_digraph, forecast_errors
from .fixtures import FIXTURES, get_fixture
from .pipeline import FitReport, GlassoConfig, msvar_fit, svar_fit
from .psc import psc_by_inversion
from .spectral import TimeSeries, read_csv, sample_spectrum, write_csv
from .varmodel import VarModel, load_model, save_model, simulate

log = logging.getLogger("msvar")

# option names a config file may set for fit/forecast; they override flags
FIT_KEYS = ("method", "p_grid", "q", "lam", "lambda_grid", "criterion", "gamma", "mt", "seed", "out_dir")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _lambda_grid(text: str):
    if text in ("log", "linear"):
        return text
    return [float(x) for x in text.split(",") if x.strip()]


def _add_fit_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=("svar", "msvar"), default="msvar")
    p.add_argument("--p-grid", dest="p_grid", type=_int_list, default=[1, 2, 3], help="comma list of lag orders")
    p.add_argument("--q", type=float, default=0.1, help="FDR level (msvar)")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="lam", type=float, default=None, help="fixed penalty (msvar)")
    g.add_argument("--lambda-grid", dest="lambda_grid", type=_lambda_grid, default=None,
                   help="'log', 'linear' or a comma list of values (msvar)")
    p.add_argument("--criterion", choices=("aic", "ebic"), default="ebic")
    p.add_argument("--gamma", type=float, default=0.5, help="eBIC gamma")
    p.add_argument("--mt", type=int, default=None, help="smoothing half-window m_t")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", dest="out_dir", default="out")
    p.add_argument("--config", default=None, help="TOML/JSON file; its values override flags")


def _apply_config(args: argparse.Namespace, allowed) -> None:
    if not args.config:
        return
    cfg = load_config(args.config)
    for key, value in cfg.items():
        key = {"lambda": "lam", "p-grid": "p_grid", "lambda-grid": "lambda_grid", "out-dir": "out_dir"}.get(key, key)
        if key not in allowed:
            raise SystemExit(f"unknown config option {key!r}")
        setattr(args, key, value)


def _fit(args, data: TimeSeries) -> FitReport:
    if args.method == "svar":
        return svar_fit(data, args.p_grid, half_window=args.mt)
    config = GlassoConfig(lam=args.lam, lambda_grid=args.lambda_grid, criterion=args.criterion,
                          gamma=args.gamma, half_window=args.mt)
    return msvar_fit(data, args.p_grid, args.q, config)


def cmd_simulate(args) -> int:
    model = load_model(args.model) if args.model else get_fixture(args.fixture)
    data = simulate(model, args.T, args.burn_in, seed=args.seed)
    write_csv(data, args.out)
    print(f"wrote {args.out} ({data.T} x {data.K})")
    return 0


def cmd_fit(args) -> int:
    _apply_config(args, FIT_KEYS)
    data = read_csv(args.data)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = _fit(args, data)
    report.save(out / "report.json")
    save_model(report.final_model, out / "model.json")
    (out / "graph.dot").write_text(export_digraph(report.final_model, data.series_names))
    if args.psc:
        psc_by_inversion(sample_spectrum(data, args.mt)).to_csv(out / "psc.csv")
    print(f"{report.method}: p*={report.selected_p} pairs={report.selected_pairs} "
          f"nonzeros={report.final_nonzeros}" + (f" flags={report.flags}" if report.flags else ""))
    return 0


def cmd_forecast(args) -> int:
    _apply_config(args, FIT_KEYS + ("test_size", "horizons"))
    data = read_csv(args.data)
    if not 0 < args.test_size < data.T:
        raise SystemExit("--test-size must lie strictly between 0 and the series length")
    train = data.head(data.T - args.test_size)
    test = data.tail(args.test_size)
    report = _fit(args, train)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "rmse.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "rmse", "sd"])
        for h in range(1, args.horizons + 1):
            err = forecast_errors(report.final_model, train, test, h)
            per_origin = np.sqrt(np.mean(err ** 2, axis=1))
            w.writerow([h, repr(float(np.sqrt(np.mean(err ** 2)))), repr(float(per_origin.std()))])
    report.save(out / "report.json")
    print(f"wrote {path}")
    return 0


def cmd_bench(args) -> int:
    base = {"fixture": args.fixture, "reps": args.reps, "T": args.T, "seed": args.seed,
            "methods": args.methods, "p_grid": args.p_grid, "q": args.q, "threads": args.threads,
            "half_window": args.mt, "test_size": args.test_size, "horizons": args.horizons,
            "glasso": {"lam": args.lam, "lambda_grid": args.lambda_grid, "criterion": args.criterion,
                       "gamma": args.gamma, "half_window": args.mt}}
    timing_K = args.timing
    if args.config:
        cfg = load_config(args.config)
        timing_K = cfg.pop("timing", timing_K)
        args.svar_limit = cfg.pop("svar_limit", args.svar_limit)
        glasso = {**base["glasso"], **cfg.pop("glasso", {})}
        base.update(cfg)
        base["glasso"] = glasso
    if base["fixture"] not in FIXTURES and base["fixture"] != "random-sparse":
        raise SystemExit(f"unknown fixture {base['fixture']!r}")
    config = BenchConfig.from_dict(base)
    out = Path(args.out_dir)
    result = run_bench(config)
    write_outputs(result, out)
    for row in result.metric_rows():
        print(",".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    for m, n in result.failures.items():
        if n:
            print(f"{m}: {n} replicate(s) failed, see failures.json")
    if timing_K:
        rows = [run_timing(int(K), seed=config.seed, half_window=None, svar_limit=args.svar_limit)
                for K in timing_K]
        with open(out / "timing.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["K", "method", "seconds", "ratio", "censored"])
            for t in rows:
                for m, s in t.seconds.items():
                    w.writerow([t.K, m, repr(s), repr(t.ratios.get(m, float("nan"))), int(m in t.censored)])
                print(f"K={t.K} " + " ".join(f"{m}={'>=' if m in t.censored else ''}{r:.3g}"
                                             for m, r in t.ratios.items()))
    return 0


def cmd_export_graph(args) -> int:
    obj = json.loads(Path(args.input).read_text())
    model = FitReport.from_dict(obj).final_model if "final_model" in obj else VarModel.from_dict(obj)
    names = args.names.split(",") if args.names else None
    text = export_digraph(model, names)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msvar", description="Sparse VAR estimation via spectral screening.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a VAR to CSV")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--fixture", choices=sorted(FIXTURES), default="model1")
    src.add_argument("--model", help="JSON model file")
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a sparse VAR to a CSV dataset")
    p.add_argument("data")
    _add_fit_options(p)
    p.add_argument("--psc", action="store_true", help="also write the PSC surface as CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="rolling-origin RMSE(h) on a held-out tail")
    p.add_argument("data")
    _add_fit_options(p)
    p.add_argument("--test-size", dest="test_size", type=int, default=24)
    p.add_argument("--horizons", type=int, default=4)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("bench", help="Monte Carlo benchmark over simulated replicates")
    _add_fit_options(p)
    p.add_argument("--fixture", default="model1", help=f"one of {sorted(FIXTURES)} or random-sparse")
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--T", type=int, default=100)
    p.add_argument("--methods", type=lambda s: s.split(","), default=["svar", "msvar"])
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--test-size", dest="test_size", type=int, default=0)
    p.add_argument("--horizons", type=int, default=4)
    p.add_argument("--timing", type=_int_list, default=None, help="comma list of K for the timing study")
    p.add_argument("--svar-limit", dest="svar_limit", type=float, default=None,
                   help="stop the timed sVAR fit after this multiple of the msVAR-fixed time")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-graph", help="DOT graph of a model or report JSON")
    p.add_argument("input")
    p.add_argument("--names", default=None, help="comma list of node labels")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_export_graph)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
