"""Acceptance suite: one PASS/FAIL line per criterion.

The Monte Carlo criteria run 50 replicates per model at the package defaults
and take several minutes; results are cached per module.
"""
import logging
import os
from functools import lru_cache

import numpy as np
import pytest
from scipy import optimize

from conftest import VERDICTS, random_pd_spectrum
from msvar import tsglasso as tg
from msvar.bench import BenchConfig, run_bench, run_timing
from msvar.fixtures import MODEL2_A1, model1, model2
from msvar.pipeline import bh_fdr
from msvar.psc import ar_inverse_spectrum, psc_by_inversion, psc_from_residuals
from msvar.restricted import bic, fit_restricted
from msvar.spectral import HermitianSpectrum, TimeSeries, full_dft
from msvar.varmodel import lagged_design, simulate

METHODS = ("svar", "msvar", "msvar-stage1")
# published rows: Bias2, Variance, MSE, TPR, FPR
MODEL1_MSVAR = (0.174, 0.732, 0.906, 0.632, 0.02)
MODEL3_MSE = {"svar": 0.851, "msvar": 0.844}
TEST_WINDOW = 24
HORIZONS = 4

pytestmark = pytest.mark.acceptance


def verdict(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
    VERDICTS.append(line)
    print("\n" + line)
    assert ok, detail


@pytest.fixture(autouse=True, scope="module")
def quiet_solver_warnings():
    # benchmark solves on the linear grid hit the iteration cap by design; keep the output readable
    logger = logging.getLogger("msvar")
    level = logger.level
    logger.setLevel(logging.ERROR)
    yield
    logger.setLevel(level)


@lru_cache(maxsize=None)
def bench(fixture):
    cfg = BenchConfig(fixture=fixture, reps=50, T=100, seed=0, methods=METHODS, threads=os.cpu_count(),
                      test_size=TEST_WINDOW if fixture == "model3" else 0, horizons=HORIZONS)
    return run_bench(cfg)


def within(value, target, tol=0.4):
    return abs(value - target) <= tol * target


def fmt(met):
    return f"Bias2={met.bias2:.3f} Var={met.variance:.3f} MSE={met.mse:.3f} TPR={met.tpr:.3f} FPR={met.fpr:.4f}"


# --- Monte Carlo criteria ---------------------------------------------------------------

def test_criterion_1_model1_benchmark():
    res = bench("model1")
    s, m = res.metrics["svar"], res.metrics["msvar"]
    order = m.mse < s.mse and m.fpr <= s.fpr
    vals = (m.bias2, m.variance, m.mse, m.tpr, m.fpr)
    bands = [within(v, t) for v, t in zip(vals, MODEL1_MSVAR)]
    names = ("Bias2", "Variance", "MSE", "TPR", "FPR")
    out = [n for n, ok in zip(names, bands) if not ok]
    verdict("criterion 1 (Model 1 benchmark)", order and all(bands),
            f"sVAR {fmt(s)} | msVAR {fmt(m)} | ordering {'ok' if order else 'violated'}"
            + (f" | outside +-40% of the published row: {', '.join(out)}" if out else ""))


def test_criterion_2_model2_reproduction():
    res = bench("model2")
    s, m = res.metrics["svar"], res.metrics["msvar"]
    qualitative = m.bias2 < s.bias2 and m.tpr > s.tpr
    X = ar_inverse_spectrum(model2()).xk
    worst = max(np.max(np.abs(X[:, 0, 1])), np.max(np.abs(X[:, 1, 0])),
                np.max(np.abs(X[:, 3, 4])), np.max(np.abs(X[:, 4, 3])))
    analytic = worst < 1e-10 and MODEL2_A1[0, 1] != 0 and MODEL2_A1[3, 4] != 0
    verdict("criterion 2 (Model 2 reproduction)", qualitative and analytic,
            f"Bias2 msVAR {m.bias2:.3f} vs sVAR {s.bias2:.3f}, TPR msVAR {m.tpr:.3f} vs sVAR {s.tpr:.3f}"
            f" ({'ok' if qualitative else 'violated'}); max |X_k| over pairs (1,2),(4,5) = {worst:.4g}"
            f" ({'exact zero' if analytic else 'not zero'})")


def test_criterion_3_model3_benchmark():
    res = bench("model3")
    parts = []
    ok = True
    for meth in ("svar", "msvar"):
        met = res.metrics[meth]
        good = met.tpr >= 0.85 and within(met.mse, MODEL3_MSE[meth])
        ok &= good
        parts.append(f"{meth} TPR={met.tpr:.3f} MSE={met.mse:.3f} (published {MODEL3_MSE[meth]})")
    verdict("criterion 3 (Model 3 benchmark)", ok, " | ".join(parts))


def test_criterion_4_stage2_value():
    res = bench("model1")
    full, st1 = res.metrics["msvar"].mse, res.metrics["msvar-stage1"].mse
    verdict("criterion 4 (stage-2 value)", full < st1, f"MSE msVAR {full:.3f} vs stage 1 only {st1:.3f}")


def test_criterion_5_timing_ordering():
    # sVAR is stopped at 30x the fixed-lambda time; a stopped run still certifies "> 10x"
    t = run_timing(50, T=500, density=0.25, seed=0, svar_limit=30)
    r = t.ratios
    ok = r["svar"] > 10 and r["msvar-tuned"] <= 2
    bound = ">=" if "svar" in t.censored else ""
    verdict("criterion 5 (timing at K=50)", ok,
            f"seconds {', '.join(f'{k}={v:.1f}' for k, v in t.seconds.items())}; "
            f"sVAR/fixed {bound}{r['svar']:.1f} (need > 10), tuned/fixed {r['msvar-tuned']:.2f} (need <= 2)")


def test_substitute_model3_forecast_rmse():
    res = bench("model3")
    truth = res.truth
    zero = []
    for r in range(res.config.reps):
        y = simulate(truth, res.config.T + TEST_WINDOW, res.config.burn_in, seed=[res.config.seed, r]).values
        test = y[res.config.T:]
        zero.append([np.sqrt(np.mean(test[h - 1:] ** 2)) for h in range(1, HORIZONS + 1)])
    zero = np.mean(zero, axis=0)
    ok = True
    parts = []
    for meth in ("svar", "msvar"):
        mean, _ = res.rmse[meth]
        finite = np.all(np.isfinite(mean))
        steps = mean[1:] / mean[:-1]
        comparable = np.all(steps <= 1.25)
        beats = np.all(mean < zero)
        ok &= bool(finite and comparable and beats)
        parts.append(f"{meth} RMSE(h)={np.round(mean, 3).tolist()}")
    verdict("substitute (Model 3 forecast RMSE)", ok,
            " | ".join(parts) + f" | zero forecast {np.round(zero, 3).tolist()}")


# --- optimizer suite --------------------------------------------------------------------

def test_criterion_6_optimizer_suite():
    rng = np.random.default_rng(6)
    checks = {}

    # (a) lambda = 0 recovers the inverse spectrum
    s = random_pd_spectrum(rng, 4, 3, 5, jitter=1.0)
    sol = tg.admm_solve(s, 0.0, rho=float(s.window), max_iter=20_000, tol_abs=1e-12, tol_rel=1e-12)
    checks["a"] = max(np.max(np.abs(t - np.linalg.inv(f))) for t, f in zip(sol.theta.matrices, s.matrices))

    # (b) stationarity after every Theta step and (d) Hermitian / PD at every iteration
    s = random_pd_spectrum(rng, 5, 3, 7, jitter=1.0)
    rho, L = 2.0, s.window
    state = {"z": tg._diagonal_start(s), "u": np.zeros_like(s.matrices), "kkt": 0.0, "herm": 0.0, "mineig": np.inf}

    def watch(k, theta, z, u):
        res = L * (-np.linalg.inv(theta) + s.matrices) + rho * (theta - state["z"] + state["u"])
        state["kkt"] = max(state["kkt"], np.max(np.linalg.norm(res, axis=(1, 2))))
        for x in (theta, z, u):
            state["herm"] = max(state["herm"], np.max(np.abs(x - np.conj(np.swapaxes(x, 1, 2)))))
        state["mineig"] = min(state["mineig"], np.linalg.eigvalsh(theta).min())
        state["z"], state["u"] = z, u

    tg.admm_solve(s, 0.3 * tg.lambda_max(s), rho=rho, callback=watch)
    checks["b"] = state["kkt"]
    checks["d"] = state["herm"] if state["mineig"] > 0 else np.inf

    # (c) Z step against a brute-force prox on M <= 3
    worst = 0.0
    for seed in range(12):
        r = np.random.default_rng([6, seed])
        M = 1 + seed % 3
        a = (r.standard_normal(M) + 1j * r.standard_normal(M)) * r.uniform(0.1, 2)
        lam, rho_c = r.uniform(0.05, 3), r.uniform(0.5, 3)
        mats = np.tile(np.eye(2, dtype=complex), (M, 1, 1))
        mats[:, 0, 1], mats[:, 1, 0] = a, np.conj(a)
        th = HermitianSpectrum(mats, np.linspace(0.1, 0.4, M), 1)
        zero = HermitianSpectrum(np.zeros((M, 2, 2)), np.linspace(0.1, 0.4, M), 1)
        z = tg.z_update(th, zero, lam, rho_c).matrices[:, 0, 1]
        mu = lam / rho_c

        def f(x):
            v = x[:M] + 1j * x[M:]
            return mu * np.linalg.norm(v) + 0.5 * np.sum(np.abs(v - a) ** 2)

        best = min(optimize.minimize(f, x0, method="Powell",
                                     options={"xtol": 1e-12, "ftol": 1e-14, "maxfev": 200_000}).fun
                   for x0 in (np.zeros(2 * M), np.r_[a.real, a.imag]))
        worst = max(worst, f(np.r_[z.real, z.imag]) - best)
    checks["c"] = max(worst, 0.0)

    # (e) scalar eigen update
    one = HermitianSpectrum(np.ones((1, 1, 1)), [0.25], 1)
    zero1 = HermitianSpectrum(np.zeros((1, 1, 1)), [0.25], 1)
    theta = tg.theta_update(zero1, zero1, one, rho=1.0, L=1).matrices[0, 0, 0].real
    checks["e"] = abs(theta - (np.sqrt(5) - 1) / 2)

    limits = {"a": 1e-6, "b": 1e-8, "c": 1e-6, "d": 0.0, "e": 1e-12}
    ok = all(checks[k] <= limits[k] for k in limits)
    verdict("criterion 6 (optimizer suite)", ok,
            ", ".join(f"({k}) {checks[k]:.2e} <= {limits[k]:.0e}" for k in sorted(limits)))


# --- statistical procedures -------------------------------------------------------------

def bh_exhaustive(p, q):
    N = len(p)
    order = sorted(range(N), key=lambda i: p[i])
    k = 0
    for i in range(1, N + 1):
        if p[order[i - 1]] <= q * i / N:
            k = i
    return set(order[:k])


def test_criterion_7_statistical_procedures():
    rng = np.random.default_rng(7)
    mismatches = 0
    for _ in range(1000):
        N = int(rng.integers(1, 13))
        # a mix of continuous values and ties on a coarse grid
        p = rng.random(N) if rng.random() < 0.5 else np.round(rng.random(N) * 0.2, 2)
        q = float(rng.uniform(0.01, 0.5))
        mismatches += set(bh_fdr(p, q).tolist()) != bh_exhaustive(list(p), q)

    ls_err = 0.0
    for seed in range(5):
        y = np.random.default_rng([7, seed]).standard_normal((120, 4))
        for p in (1, 2):
            fit = fit_restricted(TimeSeries(y), p)
            Y, Z = lagged_design(y, p)
            B = np.linalg.lstsq(Z, Y, rcond=None)[0].T
            est = np.hstack([fit.model.intercept[:, None]] + list(fit.model.coeffs))
            ls_err = max(ls_err, np.max(np.abs(est - B)))

    truth = model1()
    hits = 0
    for r in range(50):
        y = simulate(truth, 1000, seed=[70, r])
        scores = [bic(fit_restricted(y, p, presample=3), 1000 - 3, p * truth.K ** 2) for p in (1, 2, 3)]
        hits += int(np.argmin(scores)) == 0
    ok = mismatches == 0 and ls_err < 1e-8 and hits >= 45
    verdict("criterion 7 (statistical procedures)", ok,
            f"BH mismatches {mismatches}/1000; full-support vs least squares {ls_err:.1e}; BIC picks p=1 in {hits}/50")


# --- spectral suite ---------------------------------------------------------------------

def test_criterion_8_spectral_suite():
    rng = np.random.default_rng(8)
    parseval = 0.0
    for _ in range(200):
        T, K = int(rng.integers(4, 200)), int(rng.integers(1, 5))
        x = rng.standard_normal((T, K)) * rng.uniform(0.01, 100)
        parseval = max(parseval, abs(np.sum(np.abs(full_dft(x)) ** 2) / np.sum(x ** 2) - 1))

    modulus = 0.0
    for _ in range(200):
        s = psc_by_inversion(random_pd_spectrum(rng, int(rng.integers(2, 8)), int(rng.integers(1, 5)), jitter=0.01))
        modulus = max(modulus, np.max(np.abs(s.values)))

    agree = 0.0
    for K in (3, 4, 5):
        for _ in range(10):
            f = random_pd_spectrum(rng, K, 3)
            inv = psc_by_inversion(f).values
            for i in range(K):
                for j in range(K):
                    if i != j:
                        agree = max(agree, np.max(np.abs(psc_from_residuals(f, i, j) - inv[:, i, j])))
    ok = parseval < 1e-10 and modulus <= 1 + 1e-8 and agree < 1e-10
    verdict("criterion 8 (spectral suite)", ok,
            f"Parseval rel. error {parseval:.1e}; max |PSC| {modulus:.6f}; residual vs inversion {agree:.1e}")
