"""Nuisance-parameter estimators and the test covariance.

Given a TLS fit x_hat, this module estimates the error variance sigma^2,
the design second-moment matrix V_A, the design mean mu_a, the sandwich
covariance S(f) of score projections, and assembles the d x d covariance

    Sigma_T = sigma2 * (1 - 2 mu_a' V_A^{-1} mu_a) (I_d + X'X) + S(mu_a)

used to studentize the mean residual.  The leading scalar can be negative
in small samples, so Sigma_T is not guaranteed positive definite; the
assembled TestCovariance carries a pd_ok flag and no repair is attempted.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .exceptions import NotPositiveDefinite
from .linalg_stats import PD_RTOL, pd_solve, symmetrize
from .tls import TlsFit


@dataclass
class NuisanceEstimates:
    """sigma2_hat >= 0, va_hat (n x n symmetric), mu_a_hat (n-vector).

    s_a_min_eig is the smallest eigenvalue of va_hat - mu_a_hat mu_a_hat',
    a diagnostic for how close the centered design covariance is to
    singular; it is reported, never acted on.
    """

    sigma2_hat: float
    va_hat: np.ndarray
    mu_a_hat: np.ndarray
    s_a_min_eig: float


@dataclass
class TestCovariance:
    """Assembled Sigma_T estimate with its sandwich part and PD diagnosis."""

    __test__ = False  # the name says "test statistic", not "test case"

    sigma_t_hat: np.ndarray
    sandwich_part: np.ndarray
    leading_scalar: float
    pd_ok: bool


def estimate_sigma2(data, x_hat):
    """Error-variance estimate from the mean-residual trace form.

    Computes (1/d) tr[(mean(bb') - 2 X'mean(ab') + X'mean(aa')X)(I + X'X)^{-1}]
    and cross-checks it against the algebraically identical Q(x_hat)/(m d);
    the two must agree to 1e-10 relative.  Clamped at zero (roundoff on
    near-exact data can drive the trace form slightly negative).
    """
    x_hat = np.asarray(x_hat, dtype=float)
    a, b = data.a, data.b
    m, d = data.m, data.d
    mean_bb = b.T @ b / m
    mean_ab = a.T @ b / m
    mean_aa = a.T @ a / m
    gram = np.eye(d) + x_hat.T @ x_hat
    inner = mean_bb - 2.0 * x_hat.T @ mean_ab + x_hat.T @ mean_aa @ x_hat
    trace_form = float(np.trace(np.linalg.solve(gram, inner))) / d
    q_form = float(kernels.loss_total(a, b, x_hat)) / (m * d)
    scale = max(
        abs(trace_form),
        abs(q_form),
        (float(np.sum(b * b)) + float(np.sum((a @ x_hat) ** 2))) / (m * d),
        1e-300,
    )
    if abs(trace_form - q_form) > 1e-10 * scale:
        raise ArithmeticError(
            f"sigma2 trace form {trace_form!r} and loss form {q_form!r} "
            "disagree beyond 1e-10 relative; numerical inconsistency"
        )
    return max(trace_form, 0.0)


def estimate_va(data, sigma2_hat):
    """V_A estimate mean(aa') - sigma2_hat * I_n (symmetric; may be indefinite)."""
    a = data.a
    return symmetrize(a.T @ a / data.m - float(sigma2_hat) * np.eye(data.n))


def estimate_mu_a(data):
    """Design-mean estimate: the column mean of A."""
    return data.a.mean(axis=0)


def sandwich(data, x_hat, va_hat, f_hat, rel_tol=PD_RTOL):
    """Sandwich estimator S(f) = (1/m) sum_i s_i' V_A^{-1} f f' V_A^{-1} s_i.

    Each summand is an outer product g g' with g = s_i' V_A^{-1} f, so the
    result is symmetric positive semidefinite by construction.  Raises
    NotPositiveDefinite when va_hat fails the PD threshold.
    """
    x_hat = np.asarray(x_hat, dtype=float)
    f_hat = np.asarray(f_hat, dtype=float).reshape(-1)
    if f_hat.shape[0] != data.n:
        raise ValueError(f"f_hat must have length {data.n}, got {f_hat.shape[0]}")
    w = pd_solve(va_hat, f_hat, rel_tol=rel_tol)
    return symmetrize(kernels.sandwich_mean(data.a, data.b, x_hat, w))


def estimate_nuisance(data, x_hat):
    """Convenience bundle: sigma2_hat, va_hat, mu_a_hat plus the S_a diagnostic."""
    sigma2_hat = estimate_sigma2(data, x_hat)
    va_hat = estimate_va(data, sigma2_hat)
    mu_a_hat = estimate_mu_a(data)
    s_a_hat = va_hat - np.outer(mu_a_hat, mu_a_hat)
    s_a_min_eig = float(np.linalg.eigvalsh(symmetrize(s_a_hat))[0])
    return NuisanceEstimates(
        sigma2_hat=sigma2_hat,
        va_hat=va_hat,
        mu_a_hat=mu_a_hat,
        s_a_min_eig=s_a_min_eig,
    )


def estimate_sigma_t(data, fit, nuis, rel_tol=PD_RTOL):
    """Assemble the test covariance Sigma_T estimate.

    Sigma_T = sigma2 (1 - 2 mu' V^{-1} mu)(I_d + X'X) + S(mu).  The pd_ok
    flag records whether the result passes the relative eigenvalue test
    and sits above a data-scale zero floor: every entry of Sigma_T comes
    from cancelling quantities of magnitude ~ mean(|b|^2 + |X'a|^2)/d, so
    anything below rel_tol times that scale is numerically zero (the
    exact-data limit), not a usable covariance.  An indefinite Sigma_T is
    returned as-is for the caller to handle.
    """
    if isinstance(fit, TlsFit):
        x_hat = fit.x_hat
    else:
        x_hat = np.asarray(fit, dtype=float)
    mu = nuis.mu_a_hat
    quad = float(mu @ pd_solve(nuis.va_hat, mu, rel_tol=rel_tol))
    leading = nuis.sigma2_hat * (1.0 - 2.0 * quad)
    s_part = sandwich(data, x_hat, nuis.va_hat, mu, rel_tol=rel_tol)
    d = data.d
    sigma_t = symmetrize(leading * (np.eye(d) + x_hat.T @ x_hat) + s_part)
    eigs = np.linalg.eigvalsh(sigma_t)
    scale = (
        float(np.sum(data.b**2)) + float(np.sum((data.a @ x_hat) ** 2))
    ) / (data.m * d)
    pd_ok = bool(eigs[-1] > rel_tol * scale and eigs[0] > rel_tol * eigs[-1])
    return TestCovariance(
        sigma_t_hat=sigma_t,
        sandwich_part=s_part,
        leading_scalar=leading,
        pd_ok=pd_ok,
    )
