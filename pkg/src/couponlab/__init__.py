"""Coupon collection with group drawings: exact engines, simulation and asymptotics."""

__version__ = "0.1.0"

from .errors import (
    BudgetExceededError,
    CouponLabError,
    InfiniteExpectationError,
    InvalidParameterError,
    StateCollapseError,
    TruncationWarning,
)
from .exact import (
    arcs_closed_form,
    arcs_expectation,
    classical_expectation,
    expectation_bounds,
    harmonic,
    missing_count_pmf,
    near_decomposition_expectation,
    rotation_expectation,
    uniform_expectation,
    uniform_expectation_ie,
)
from .dist_engine import PackageDistribution, build_distribution, compare_report, expected_rounds, rounds_pmf
from .montecarlo import SimulationReport, empirical_missing_pmf, estimate_expected_rounds, sample_rounds
from .asymptotics import (
    case1_prediction,
    case2_prediction,
    case3_limit,
    g_eval,
    gumbel_cdf,
    gumbel_scaled_threshold,
    tv_distance,
)
from .optimizer import improvement_certificate, optimize_distribution, project_to_simplex, verify_certificate
