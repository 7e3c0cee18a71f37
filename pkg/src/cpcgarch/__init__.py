"""Discrete-time GARCH option valuation: HN, CJOW, OP and the corrected
positive component (CPC) model."""

from .errors import (
    EmptyPanel,
    FilterBreakdown,
    GarchError,
    HessianNotPD,
    IvUnsolvable,
    MalformedRow,
    MgfDiverged,
    NegativeVarianceForSqrt,
    NoConvergence,
    NonFiniteState,
    NonMonotoneDates,
    NonStationary,
    PricingDiverged,
    TooManyDeadPaths,
)
from .estimate import FilterOutput, FitResult, ReturnSeries, filter_series, fit, log_likelihood, standard_errors
from .fixtures import FIXTURES, get_fixture
from .mgf import log_mgf, mgf, recurse_coeffs
from .models import (
    Family,
    Measure,
    ModelSpec,
    VolState,
    advance,
    return_step,
    risk_neutralize,
    stationary_moments,
    step,
    validate,
)
from .options_eval import implied_vol, ivrmse
from .pricing import Contract, integrand_profile, price_gil_pelaez, price_monte_carlo
from .simulate import SimConfig, negative_census, simulate_paths

# ``filter`` would shadow the builtin, so the filter is exported under both names
filter = filter_series  # noqa: A001

__all__ = [
    "Family", "Measure", "ModelSpec", "VolState", "validate", "step", "advance", "return_step",
    "risk_neutralize", "stationary_moments", "SimConfig", "simulate_paths", "negative_census",
    "mgf", "log_mgf", "recurse_coeffs", "Contract", "price_gil_pelaez", "integrand_profile",
    "price_monte_carlo", "ReturnSeries", "FilterOutput", "FitResult", "filter_series", "log_likelihood",
    "fit", "standard_errors", "implied_vol", "ivrmse", "FIXTURES", "get_fixture",
    "GarchError", "NonFiniteState", "NegativeVarianceForSqrt", "NonStationary", "MgfDiverged",
    "PricingDiverged", "TooManyDeadPaths", "FilterBreakdown", "NoConvergence", "HessianNotPD",
    "IvUnsolvable", "EmptyPanel", "MalformedRow", "NonMonotoneDates",
]
