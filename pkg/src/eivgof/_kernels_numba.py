"""Numba-accelerated twins of the kernels in ``_kernels_numpy.py``.

Row kernels are fused single-pass loops (no per-row temporaries); scalar
chi-squared kernels follow the same series/continued-fraction algorithms
as the numpy backend.  Keep the two modules in sync.
"""

import math

import numpy as np
from numba import njit

NAME = "numba"

_GAMMA_EPS = 1e-15
_GAMMA_ITMAX = 500
_POISSON_CUTOFF = 1e-14

_PRIMES = np.array([2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                    53, 59, 61, 67, 71, 73, 79, 83, 89, 97], dtype=np.int64)


@njit(cache=True, nogil=True)
def _chol_lower(M):
    # unblocked Cholesky; M is a small (d, d) SPD matrix
    d = M.shape[0]
    L = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1):
            acc = M[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            if i == j:
                L[i, i] = math.sqrt(acc)
            else:
                L[i, j] = acc / L[j, j]
    return L


@njit(cache=True, nogil=True)
def _gram_chol(X):
    # Cholesky factor of I_d + X'X
    n, d = X.shape
    M = np.empty((d, d))
    for i in range(d):
        for j in range(d):
            acc = 1.0 if i == j else 0.0
            for k in range(n):
                acc += X[k, i] * X[k, j]
            M[i, j] = acc
    return _chol_lower(M)


@njit(cache=True, nogil=True)
def _chol_solve_mat(L, B):
    # solve (L L') Z = B for (d, k) right-hand side
    d, k = B.shape
    Z = np.empty((d, k))
    for c in range(k):
        for i in range(d):
            acc = B[i, c]
            for j in range(i):
                acc -= L[i, j] * Z[j, c]
            Z[i, c] = acc / L[i, i]
        for i in range(d - 1, -1, -1):
            acc = Z[i, c]
            for j in range(i + 1, d):
                acc -= L[j, i] * Z[j, c]
            Z[i, c] = acc / L[i, i]
    return Z


@njit(cache=True, nogil=True)
def loss_total(A, B, X):
    m, n = A.shape
    d = B.shape[1]
    L = _gram_chol(X)
    r = np.empty(d)
    z = np.empty(d)
    total = 0.0
    for i in range(m):
        for j in range(d):
            acc = -B[i, j]
            for k in range(n):
                acc += A[i, k] * X[k, j]
            r[j] = acc
        # r' M^{-1} r = ||L^{-1} r||^2
        for j in range(d):
            acc = r[j]
            for k in range(j):
                acc -= L[j, k] * z[k]
            z[j] = acc / L[j, j]
            total += z[j] * z[j]
    return total


@njit(cache=True, nogil=True)
def score_total(A, B, X):
    m, n = A.shape
    d = B.shape[1]
    L = _gram_chol(X)
    S1 = np.zeros((n, d))   # sum a_i r_i'
    S2 = np.zeros((d, d))   # sum r_i r_i'
    r = np.empty(d)
    for i in range(m):
        for j in range(d):
            acc = -B[i, j]
            for k in range(n):
                acc += A[i, k] * X[k, j]
            r[j] = acc
        for k in range(n):
            aik = A[i, k]
            for j in range(d):
                S1[k, j] += aik * r[j]
        for j in range(d):
            for l in range(d):
                S2[j, l] += r[j] * r[l]
    return S1 - X @ _chol_solve_mat(L, S2)


@njit(cache=True, nogil=True)
def sandwich_mean(A, B, X, w):
    m, n = A.shape
    d = B.shape[1]
    L = _gram_chol(X)
    xw = np.empty((d, 1))
    for j in range(d):
        acc = 0.0
        for k in range(n):
            acc += X[k, j] * w[k]
        xw[j, 0] = acc
    u = _chol_solve_mat(L, xw)
    S = np.zeros((d, d))
    r = np.empty(d)
    for i in range(m):
        c = 0.0
        for k in range(n):
            c += A[i, k] * w[k]
        for j in range(d):
            acc = -B[i, j]
            for k in range(n):
                acc += A[i, k] * X[k, j]
            r[j] = acc
            c -= acc * u[j, 0]
        c2 = c * c
        for j in range(d):
            for l in range(d):
                S[j, l] += c2 * r[j] * r[l]
    return S / m


@njit(cache=True, nogil=True)
def _gamma_p_series(a, x):
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


@njit(cache=True, nogil=True)
def _gamma_q_cfrac(a, x):
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


@njit(cache=True, nogil=True)
def chi2_sf(x, df):
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


@njit(cache=True, nogil=True)
def _chi2_log_pdf(x, df):
    a = 0.5 * df
    return (a - 1.0) * math.log(x) - 0.5 * x - a * math.log(2.0) - math.lgamma(a)


@njit(cache=True, nogil=True)
def chi2_upper_quantile(alpha, df):
    lo = 0.0
    hi = float(df) + 10.0
    while chi2_sf(hi, df) > alpha:
        hi *= 2.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if chi2_sf(mid, df) > alpha:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-6 * max(1.0, hi):
            break
    q = 0.5 * (lo + hi)
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


@njit(cache=True, nogil=True)
def noncentral_chi2_sf(x, df, lam):
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
        if k > h and w < _POISSON_CUTOFF:
            break
        k += 1
    return min(total, 1.0)


@njit(cache=True, nogil=True)
def halton(offset, m, n):
    if n > _PRIMES.shape[0]:
        raise ValueError("halton dimension limit exceeded")
    out = np.empty((m, n))
    for j in range(n):
        base = _PRIMES[j]
        for row in range(m):
            i = offset + 1 + row
            f = 1.0
            x = 0.0
            while i > 0:
                f /= base
                x += f * (i % base)
                i //= base
            out[row, j] = x
    return out
