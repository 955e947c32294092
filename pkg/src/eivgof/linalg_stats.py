"""Symmetric-matrix utilities and the chi-squared distribution family.

This module provides exactly the probability machinery the goodness-of-fit
test needs: the central chi-squared survival function and upper quantile,
the noncentral chi-squared survival function, and positive-definite
matrix helpers (solve, inverse square root) built on the symmetric
eigendecomposition.

Noncentrality convention
------------------------
``noncentral_chi2_sf`` takes the noncentrality as ``tau``, the *norm of
the mean vector*: the distribution of ``||N(tau * e, I_d)||^2`` for a
unit vector ``e``, i.e. ``(g_1 + tau)^2 + g_2^2 + ... + g_d^2`` with
``g_i`` i.i.d. standard normal.  Most references (and scipy) use the
noncentrality parameter ``lam = tau**2`` instead.  The conversion is done
internally; passing a conventional ``lam`` where ``tau`` is expected is a
factor-of-square bug.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .exceptions import NotPositiveDefinite

#: Relative eigenvalue threshold below which a symmetric matrix is treated
#: as not positive definite (relative to its largest eigenvalue).
PD_RTOL = 1e-12


@dataclass
class Chi2Spec:
    """Degrees of freedom and noncentrality (tau convention) of a chi-squared law."""

    df: int
    noncentrality: float = 0.0

    def __post_init__(self):
        if int(self.df) != self.df or self.df < 1:
            raise ValueError(f"df must be a positive integer, got {self.df!r}")
        self.df = int(self.df)
        self.noncentrality = float(self.noncentrality)
        if not (self.noncentrality >= 0.0):
            raise ValueError(f"noncentrality must be >= 0, got {self.noncentrality!r}")

    def sf(self, x):
        if self.noncentrality == 0.0:
            return chi2_sf(x, self.df)
        return noncentral_chi2_sf(x, self.df, self.noncentrality)


def _check_df(d):
    if isinstance(d, bool) or int(d) != d or d < 1:
        raise ValueError(f"degrees of freedom must be a positive integer, got {d!r}")
    return int(d)


def chi2_sf(x, d):
    """Survival function P(chi2_d > x) of the central chi-squared law.

    Implemented through the regularized incomplete gamma function (series
    for small x, continued fraction otherwise); absolute accuracy ~1e-12.
    """
    d = _check_df(d)
    x = float(x)
    if math.isnan(x) or x < 0.0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    if math.isinf(x):
        return 0.0
    return float(kernels.chi2_sf(x, d))


def chi2_upper_quantile(alpha, d):
    """Upper alpha-quantile: the q with P(chi2_d > q) = alpha, 0 < alpha < 1/2."""
    d = _check_df(d)
    alpha = float(alpha)
    if not (0.0 < alpha < 0.5):
        raise ValueError(f"alpha must lie in (0, 1/2), got {alpha!r}")
    return float(kernels.chi2_upper_quantile(alpha, d))


def noncentral_chi2_sf(x, d, tau):
    """Survival function of the noncentral chi-squared law with mean-norm tau.

    ``tau`` is the norm of the Gaussian mean vector, so the conventional
    noncentrality parameter is ``lam = tau**2`` (see module docstring).
    ``tau = 0`` falls back to the central law exactly.
    """
    d = _check_df(d)
    x = float(x)
    tau = float(tau)
    if math.isnan(x) or x < 0.0:
        raise ValueError(f"x must be >= 0, got {x!r}")
    if math.isnan(tau) or tau < 0.0:
        raise ValueError(f"tau must be >= 0, got {tau!r}")
    if math.isinf(x):
        return 0.0
    return float(kernels.noncentral_chi2_sf(x, d, tau * tau))


def symmetrize(m):
    """Return (M + M') / 2 as a new array."""
    m = np.asarray(m, dtype=float)
    return 0.5 * (m + m.T)


def _eigh_checked(m, rel_tol, what):
    m = symmetrize(m)
    w, u = np.linalg.eigh(m)
    w_max = w[-1]
    if w_max <= 0.0 or w[0] <= rel_tol * w_max:
        raise NotPositiveDefinite(
            f"{what}: smallest eigenvalue {w[0]:.6e} fails the positive-definite "
            f"threshold {rel_tol:.1e} * {w_max:.6e}"
        )
    return w, u


def is_pd(m, rel_tol=PD_RTOL):
    """True iff all eigenvalues exceed rel_tol times the largest one."""
    w = np.linalg.eigvalsh(symmetrize(m))
    return bool(w[-1] > 0.0 and w[0] > rel_tol * w[-1])


def pd_solve(m, rhs, rel_tol=PD_RTOL):
    """Solve M y = rhs for symmetric positive definite M via eigendecomposition.

    Raises NotPositiveDefinite when M fails the relative eigenvalue test.
    """
    w, u = _eigh_checked(m, rel_tol, "pd_solve")
    rhs = np.asarray(rhs, dtype=float)
    z = u.T @ rhs
    z = (z.T / w).T
    return u @ z


def sym_inv_sqrt(m, rel_tol=PD_RTOL):
    """Symmetric positive definite Y with Y M Y = I, via eigendecomposition."""
    w, u = _eigh_checked(m, rel_tol, "sym_inv_sqrt")
    return symmetrize((u / np.sqrt(w)) @ u.T)
