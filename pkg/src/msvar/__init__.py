"""Sparse vector autoregression via frequency-domain screening.

Two estimators share one restricted-likelihood back end: ``svar_fit`` ranks
series pairs by partial spectral coherence and prunes by t-ratio, while
``msvar_fit`` screens pairs with a group-lasso inverse spectrum and prunes
with Benjamini-Hochberg.
"""
from .evaluation import Metrics, export_digraph, metrics, rmse_h
from .fixtures import get_fixture, random_sparse
from .pipeline import FitReport, GlassoConfig, bh_fdr, msvar_fit, svar_fit
from .psc import ar_inverse_spectrum, psc_by_inversion
from .restricted import RestrictedFit, bic, fit_restricted
from .spectral import HermitianSpectrum, TimeSeries, read_csv, sample_spectrum, write_csv
from .tsglasso import admm_solve, lambda_max, tune
from .varmodel import SupportMask, VarModel, forecast, simulate

__all__ = [
    "FitReport", "GlassoConfig", "HermitianSpectrum", "Metrics", "RestrictedFit", "SupportMask",
    "TimeSeries", "VarModel", "admm_solve", "ar_inverse_spectrum", "bh_fdr", "bic", "export_digraph",
    "fit_restricted", "forecast", "get_fixture", "lambda_max", "metrics", "msvar_fit",
    "psc_by_inversion", "random_sparse", "read_csv", "rmse_h", "sample_spectrum", "simulate",
    "svar_fit", "tune", "write_csv",
]
__version__ = "0.1.0"
