"""Goodness-of-fit test for the errors-in-variables linear relation.

The test statistic is T2 = m * t0' Sigma_T^{-1} t0 where t0 is the mean
residual (1/m) sum_i (b_i - X' a_i) and Sigma_T the assembled test
covariance.  Under the null hypothesis that a linear relation holds, T2
is asymptotically chi-squared with d degrees of freedom, so H0 is
rejected when T2 exceeds the upper alpha-quantile of chi2_d.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import CovarianceNotPD, EivGofError
from .linalg_stats import chi2_sf, chi2_upper_quantile, pd_solve
from .nuisance import (
    NuisanceEstimates,
    TestCovariance,
    estimate_nuisance,
    estimate_sigma_t,
)
from .tls import TlsFit, tls_estimate

ACCEPT = "accept"
REJECT = "reject"


@dataclass
class GofReport:
    """Full record of one test run; decision/p_value/quantile are consistent."""

    t0: np.ndarray
    t2: float
    df: int
    p_value: float
    alpha: float
    quantile: float
    decision: str
    fit: TlsFit
    nuisance: NuisanceEstimates
    covariance: TestCovariance

    @property
    def reject(self):
        return self.decision == REJECT


def compute_t0(data, x_hat):
    """Mean residual vector T0 = (1/m) sum_i (b_i - X' a_i), length d."""
    x_hat = np.asarray(x_hat, dtype=float)
    return (data.b - data.a @ x_hat).mean(axis=0)


def test_statistic(t0, sigma_t, m):
    """T2 = m * t0' Sigma_T^{-1} t0, via a positive-definite solve.

    Algebraically identical to m * ||Sigma_T^{-1/2} t0||^2.  Raises
    CovarianceNotPD when the covariance failed its PD check -- the
    statistic is undefined at such a sample.
    """
    if isinstance(sigma_t, TestCovariance):
        if not sigma_t.pd_ok:
            raise CovarianceNotPD(
                "Sigma_T estimate is not positive definite at this sample; "
                "T2 is undefined",
                stage="test_statistic",
            )
        mat = sigma_t.sigma_t_hat
    else:
        mat = np.asarray(sigma_t, dtype=float)
    t0 = np.asarray(t0, dtype=float).reshape(-1)
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    return float(m) * float(t0 @ pd_solve(mat, t0))


def run_test(data, alpha=0.05):
    """Full pipeline: fit, nuisance estimation, covariance, statistic, decision.

    Stage labels are attached to any propagated error so failures report
    where the pipeline broke: tls_estimate, nuisance, sigma_t, or
    test_statistic.
    """
    alpha = float(alpha)
    if not (0.0 < alpha < 0.5):
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha!r}")

    fit = tls_estimate(data)
    nuis = _staged(lambda: estimate_nuisance(data, fit.x_hat), "nuisance")
    cov = _staged(lambda: estimate_sigma_t(data, fit, nuis), "sigma_t")
    t0 = compute_t0(data, fit.x_hat)
    t2 = test_statistic(t0, cov, data.m)
    d = data.d
    p_value = chi2_sf(t2, d)
    quantile = chi2_upper_quantile(alpha, d)
    decision = REJECT if t2 > quantile else ACCEPT
    return GofReport(
        t0=t0,
        t2=t2,
        df=d,
        p_value=p_value,
        alpha=alpha,
        quantile=quantile,
        decision=decision,
        fit=fit,
        nuisance=nuis,
        covariance=cov,
    )


def _staged(thunk, stage):
    try:
        return thunk()
    except EivGofError as exc:
        if exc.stage is None:
            exc.stage = stage
        raise
