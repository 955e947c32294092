"""Total least squares and goodness-of-fit testing for errors-in-variables models.

The model is A X ~ B with both A and B observed under additive i.i.d.
noise.  The package provides the SVD-based TLS estimator of X, consistent
nuisance estimators (error variance, design moments, sandwich covariance),
an asymptotically chi-squared goodness-of-fit test for the linear relation,
the matching noncentral-chi-squared power theory under local alternatives,
and a deterministic parallel Monte Carlo harness that validates both.
"""

from ._backend import BACKEND
from .exceptions import (
    CovarianceNotPD,
    DegenerateInput,
    EivGofError,
    NoFiniteSolution,
    NotPositiveDefinite,
)
from .gof import ACCEPT, REJECT, GofReport, compute_t0, run_test, test_statistic
from .linalg_stats import (
    PD_RTOL,
    Chi2Spec,
    chi2_sf,
    chi2_upper_quantile,
    is_pd,
    noncentral_chi2_sf,
    pd_solve,
    sym_inv_sqrt,
    symmetrize,
)
from .nuisance import (
    NuisanceEstimates,
    TestCovariance,
    estimate_mu_a,
    estimate_nuisance,
    estimate_sigma2,
    estimate_sigma_t,
    estimate_va,
    sandwich,
)
from .simulate import (
    CltReport,
    ConstantAlternative,
    DesignSpec,
    ErrorSpec,
    LevelReport,
    PowerReport,
    QuadraticAlternative,
    SimConfig,
    asymptotic_sigma_t,
    generate_design,
    generate_h0,
    generate_h1m,
    monte_carlo_level,
    monte_carlo_power,
    theoretical_tau,
    validate_estimator_clt,
)
from .tls import EivDataset, TlsFit, loss_Q, loss_q, score_s, score_sum, tls_estimate

__version__ = "0.1.0"

__all__ = [
    "ACCEPT",
    "BACKEND",
    "Chi2Spec",
    "CltReport",
    "ConstantAlternative",
    "CovarianceNotPD",
    "DegenerateInput",
    "DesignSpec",
    "EivDataset",
    "EivGofError",
    "ErrorSpec",
    "GofReport",
    "LevelReport",
    "NoFiniteSolution",
    "NotPositiveDefinite",
    "NuisanceEstimates",
    "PD_RTOL",
    "PowerReport",
    "QuadraticAlternative",
    "REJECT",
    "SimConfig",
    "TestCovariance",
    "TlsFit",
    "asymptotic_sigma_t",
    "chi2_sf",
    "chi2_upper_quantile",
    "compute_t0",
    "estimate_mu_a",
    "estimate_nuisance",
    "estimate_sigma2",
    "estimate_sigma_t",
    "estimate_va",
    "generate_design",
    "generate_h0",
    "generate_h1m",
    "is_pd",
    "loss_Q",
    "loss_q",
    "monte_carlo_level",
    "monte_carlo_power",
    "noncentral_chi2_sf",
    "pd_solve",
    "run_test",
    "sandwich",
    "score_s",
    "score_sum",
    "sym_inv_sqrt",
    "symmetrize",
    "test_statistic",
    "theoretical_tau",
    "tls_estimate",
    "validate_estimator_clt",
]
