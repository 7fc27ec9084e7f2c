import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from msvar.fixtures import model1, model2
from msvar.pipeline import FitReport, GlassoConfig, bh_fdr, msvar_fit, stage1_glasso, svar_fit
from msvar.spectral import TimeSeries, sample_spectrum
from msvar.tsglasso import lambda_max
from msvar.varmodel import VarModel, simulate


def bh_oracle(p, q):
    """Largest k with p_(k) <= qk/N, found by brute force over every k."""
    N = len(p)
    srt = sorted(p)
    k = max([k for k in range(1, N + 1) if srt[k - 1] <= q * k / N], default=0)
    if k == 0:
        return set()
    cut = srt[k - 1]
    return {i for i, v in enumerate(p) if v <= cut}


# --- BH / BY ----------------------------------------------------------------------

def test_bh_hand_examples():
    assert bh_fdr([0.01, 0.02, 0.03, 0.5], 0.1).tolist() == [0, 1, 2]
    assert bh_fdr([0.2, 0.3], 0.1).tolist() == []
    # step-up: p_(2) passes even though p_(1) alone would too
    assert bh_fdr([0.04, 0.05], 0.1).tolist() == [0, 1]
    assert bh_fdr([], 0.1).tolist() == []


def test_by_is_more_conservative():
    p = [0.001, 0.01, 0.03, 0.04, 0.05]
    assert bh_fdr(p, 0.1).tolist() == [0, 1, 2, 3, 4]
    # c(5) = 2.2833, thresholds 0.00876k: 0.03 > 0.0263, 0.04 > 0.035, 0.05 > 0.0438
    assert bh_fdr(p, 0.1, dependent=True).tolist() == [0, 1]


@given(st.lists(st.floats(0, 1), min_size=1, max_size=8), st.floats(0.01, 0.5))
def test_bh_matches_oracle(p, q):
    assert set(bh_fdr(p, q).tolist()) == bh_oracle(p, q)


def test_bh_exhaustive_small_grid():
    vals = [0.0, 0.01, 0.03, 0.05, 0.2, 1.0]
    for p in itertools.product(vals, repeat=3):
        for q in (0.05, 0.1, 0.3):
            assert set(bh_fdr(p, q).tolist()) == bh_oracle(list(p), q)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.floats(0.01, 0.5), st.randoms())
def test_bh_permutation_invariant(p, q, rnd):
    perm = list(range(len(p)))
    rnd.shuffle(perm)
    a = {perm.index(i) for i in range(len(p)) if i in set(bh_fdr(p, q).tolist())}
    b = set(bh_fdr([p[i] for i in perm], q).tolist())
    assert a == b


@given(st.lists(st.floats(0, 0.999), min_size=1, max_size=10))
def test_bh_q_near_one_rejects_all_below_one(p):
    assert len(bh_fdr(p, 0.9999999)) == len(p)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=10), st.floats(0.01, 0.2), st.floats(0.0, 0.3))
def test_bh_monotone_in_q(p, q, dq):
    assert set(bh_fdr(p, q).tolist()) <= set(bh_fdr(p, min(q + dq, 0.99)).tolist())


@pytest.mark.parametrize("bad", [0.0, 1.0, -0.1])
def test_bh_rejects_bad_level(bad):
    with pytest.raises(ValueError):
        bh_fdr([0.1], bad)


def test_bh_rejects_bad_p():
    with pytest.raises(ValueError):
        bh_fdr([1.2], 0.1)


# --- sVAR -----------------------------------------------------------------------

def diagonal_model(K=5):
    return VarModel((0.5 * np.eye(K))[None], None, np.eye(K))


def test_svar_diagonal_truth_selects_no_pairs():
    hits = 0
    for r in range(50):
        rep = svar_fit(simulate(diagonal_model(), 200, seed=[61, r]), p_grid=(1, 2))
        hits += rep.selected_pairs == 0
    assert hits >= 40


def test_svar_single_series():
    y = simulate(VarModel([[[0.6]]], None, [[1.0]]), 150, seed=2)
    rep = svar_fit(y)
    assert rep.selected_pairs == 0 and rep.final_model.K == 1
    assert rep.selected_p == 1


@pytest.mark.parametrize("fit", ["svar", "msvar"])
def test_stage2_subset_of_stage1_and_pair_symmetry(fit):
    y = simulate(model2(), 100, seed=4)
    rep = svar_fit(y) if fit == "svar" else msvar_fit(y)
    assert rep.stage2_support.issubset(rep.stage1_support)
    s1 = rep.stage1_support.coeff_support
    assert np.array_equal(s1, np.transpose(s1, (0, 2, 1)) | s1)
    assert np.array_equal(s1 | np.transpose(s1, (0, 2, 1)), s1)
    assert np.all(rep.final_model.coeffs[~rep.stage2_support.coeff_support] == 0)
    assert rep.final_nonzeros == rep.stage2_support.n_free


def test_svar_trace_covers_grid():
    y = simulate(model2(), 100, seed=4)
    rep = svar_fit(y, p_grid=(1, 2), m_grid=[0, 1, 2, 3])
    assert [(p, M) for p, M, _ in rep.bic_trace] == [(p, M) for p in (1, 2) for M in range(4)]
    best = min(rep.bic_trace, key=lambda r: r[2])
    assert (rep.selected_p, rep.selected_pairs) == (best[0], best[1])
    assert rep.refinement_trace[0][0] == 0
    assert len(rep.refinement_trace) == rep.stage1_support.n_free + 1


@pytest.mark.parametrize("fit", ["svar", "msvar"])
def test_fits_are_deterministic(fit):
    y = simulate(model1(), 100, seed=8)
    f = svar_fit if fit == "svar" else msvar_fit
    assert f(y) == f(y)


def test_report_json_round_trip(tmp_path):
    rep = msvar_fit(simulate(model2(), 100, seed=5))
    rep.save(tmp_path / "r.json")
    back = FitReport.from_json((tmp_path / "r.json").read_text())
    assert back == rep
    assert back.tuning_trace == rep.tuning_trace


def test_grid_errors():
    y = simulate(model2(), 100, seed=5)
    with pytest.raises(ValueError):
        svar_fit(y, p_grid=[])
    with pytest.raises(ValueError):
        msvar_fit(y, q=1.5)


# --- msVAR ----------------------------------------------------------------------

def test_msvar_flags_empty_fdr_selection():
    y = TimeSeries(np.random.default_rng(3).standard_normal((100, 4)))
    rep = msvar_fit(y, q=1e-9)
    assert "fdr_rejected_nothing" in rep.flags
    assert rep.final_nonzeros == 0
    np.testing.assert_allclose(rep.final_model.intercept, y.values[3:].mean(axis=0), atol=1e-10)


def test_msvar_records_selected_lag_and_bic():
    rep = msvar_fit(simulate(model1(), 100, seed=6))
    assert [p for p, _ in rep.bic_trace] == [1, 2, 3]
    assert rep.selected_p == min(rep.bic_trace, key=lambda r: r[1])[0]
    assert rep.fdr_q == 0.1
    assert len(rep.tuning_trace["lambdas"]) == 20


def test_msvar_fixed_lambda_skips_tuning():
    rep = msvar_fit(simulate(model1(), 100, seed=6), config=GlassoConfig(lam=0.5))
    assert set(rep.tuning_trace) == {"lambda", "iterations", "converged"}


def test_msvar_single_series():
    rep = msvar_fit(simulate(VarModel([[[0.6]]], None, [[1.0]]), 150, seed=2))
    assert rep.selected_pairs == 0 and rep.tuning_trace is None


def test_stage1_grid_presets():
    y = simulate(model2(), 100, seed=7)
    _, lin = stage1_glasso(y, GlassoConfig())
    np.testing.assert_allclose(lin["lambdas"], np.arange(1, 21) / 21)
    _, log = stage1_glasso(y, GlassoConfig(lambda_grid="log"))
    hi = lambda_max(sample_spectrum(y))
    np.testing.assert_allclose(log["lambdas"], np.geomspace(hi / 100, hi, 20))
    with pytest.raises(ValueError):
        stage1_glasso(y, GlassoConfig(lambda_grid="cubic"))


def test_glasso_config_from_dict():
    c = GlassoConfig.from_dict({"lambda": 0.3, "criterion": "aic"})
    assert c.lam == 0.3 and c.criterion == "aic"
    with pytest.raises(ValueError, match="unknown"):
        GlassoConfig.from_dict({"lamda": 0.3})


@given(st.integers(0, 1000))
@settings(max_examples=5)
def test_msvar_support_nested_property(seed):
    rep = msvar_fit(simulate(model2(), 100, seed=[99, seed]), p_grid=(1, 2))
    assert rep.stage2_support.issubset(rep.stage1_support)
    assert rep.final_model.p == rep.selected_p
