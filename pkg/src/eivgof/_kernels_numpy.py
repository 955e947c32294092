"""Pure-numpy implementations of the hot numeric kernels.

Fallback backend used when numba is unavailable or when
``EIV_GOF_BACKEND=numpy`` is set.  Keep function signatures and semantics
in sync with ``_kernels_numba.py``; ``tests/test_backend.py`` checks the
two backends agree numerically.
"""

import math

import numpy as np

NAME = "numpy"

_GAMMA_EPS = 1e-15
_GAMMA_ITMAX = 500
_POISSON_CUTOFF = 1e-14

_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
           53, 59, 61, 67, 71, 73, 79, 83, 89, 97)


# ---------------------------------------------------------------------------
# Row-sum kernels for the quadratic loss, its score, and the sandwich average.
# All take float64 arrays: A (m, n), B (m, d), X (n, d).
# ---------------------------------------------------------------------------

def loss_total(A, B, X):
    """Sum over rows of (X'a - b)' (I + X'X)^{-1} (X'a - b)."""
    d = B.shape[1]
    R = A @ X - B
    M = np.eye(d) + X.T @ X
    # solve, never an explicit inverse
    Y = np.linalg.solve(M, R.T)
    return float(np.sum(R.T * Y))


def score_total(A, B, X):
    """Sum over rows of the estimating-function matrices, shape (n, d)."""
    d = B.shape[1]
    R = A @ X - B
    M = np.eye(d) + X.T @ X
    return A.T @ R - X @ np.linalg.solve(M, R.T @ R)


def sandwich_mean(A, B, X, w):
    """Average of s_i' w w' s_i over rows, shape (d, d).

    Each row contributes (s_i' w)(s_i' w)' with s_i the estimating-function
    matrix; using s_i = (a_i - X (I+X'X)^{-1} r_i) r_i' the projection
    collapses to a scalar c_i times the residual r_i.
    """
    m, d = B.shape
    R = A @ X - B
    M = np.eye(d) + X.T @ X
    u = np.linalg.solve(M, X.T @ w)
    c = A @ w - R @ u
    G = R * c[:, None]
    return (G.T @ G) / m


# ---------------------------------------------------------------------------
# Chi-squared family (scalar kernels).
# ---------------------------------------------------------------------------

def _gamma_p_series(a, x):
    # regularized lower incomplete gamma by power series; use for x < a + 1
    ap = a
    term = 1.0 / a
    total = term
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_cfrac(a, x):
    # regularized upper incomplete gamma by Lentz continued fraction; x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def chi2_sf(x, df):
    """P(chi2_df > x) for integer df >= 1, x >= 0."""
    if x <= 0.0:
        return 1.0
    a = 0.5 * df
    half_x = 0.5 * x
    if half_x < a + 1.0:
        p = 1.0 - _gamma_p_series(a, half_x)
    else:
        p = _gamma_q_cfrac(a, half_x)
    if p < 0.0:
        return 0.0
    if p > 1.0:
        return 1.0
    return p


def _chi2_log_pdf(x, df):
    a = 0.5 * df
    return (a - 1.0) * math.log(x) - 0.5 * x - a * math.log(2.0) - math.lgamma(a)


def chi2_upper_quantile(alpha, df):
    """q with P(chi2_df > q) = alpha; bracketed bisection then Newton polish."""
    lo = 0.0
    hi = float(df) + 10.0
    while chi2_sf(hi, df) > alpha:
        hi *= 2.0
    # bisection to a coarse bracket
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if chi2_sf(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6 * max(1.0, hi):
            break
    q = 0.5 * (lo + hi)
    # Newton on sf(q) - alpha = 0 (sf' = -pdf), kept inside the bracket
    for _ in range(100):
        f = chi2_sf(q, df) - alpha
        if f > 0.0:
            lo = max(lo, q)
        elif f < 0.0:
            hi = min(hi, q)
        step = f / math.exp(_chi2_log_pdf(q, df))
        q_next = q + step
        if not (lo < q_next < hi):
            q_next = 0.5 * (lo + hi)
        if abs(q_next - q) <= 1e-12 * q + 1e-15:
            return q_next
        q = q_next
    return q


def noncentral_chi2_sf(x, df, lam):
    """P(chi2_df(lambda) > x), Poisson mixture over central terms.

    ``lam`` is the conventional noncentrality (sum of squared means).
    """
    if lam == 0.0:
        return chi2_sf(x, df)
    h = 0.5 * lam
    log_h = math.log(h)
    total = 0.0
    k = 0
    while True:
        log_w = -h + k * log_h - math.lgamma(k + 1.0)
        w = math.exp(log_w)
        total += w * chi2_sf(x, df + 2 * k)
        # truncate once the Poisson weights are past their peak and negligible
        if k > h and w < _POISSON_CUTOFF:
            break
        k += 1
    return min(total, 1.0)


# ---------------------------------------------------------------------------
# Low-discrepancy lattice generator.
# ---------------------------------------------------------------------------

def halton(offset, m, n):
    """Halton points with indices offset+1 .. offset+m, shape (m, n) in (0,1)."""
    if n > len(_PRIMES):
        raise ValueError(f"halton supports at most {len(_PRIMES)} dimensions")
    out = np.empty((m, n))
    idx0 = np.arange(offset + 1, offset + m + 1, dtype=np.int64)
    for j in range(n):
        base = _PRIMES[j]
        x = np.zeros(m)
        f = 1.0
        i = idx0.copy()
        while i.any():
            f /= base
            x += f * (i % base)
            i //= base
        out[:, j] = x
    return out
