"""Total least squares for the errors-in-variables model A X ~ B.

Observed rows are (a_i, b_i) with a_i in R^n and b_i in R^d, both
measured with additive i.i.d. noise around a linear relation
b_i0 = X0' a_i0.  The TLS estimate of X0 minimizes

    Q(X) = sum_i (a_i'X - b_i') (I_d + X'X)^{-1} (X'a_i - b_i),

the squared orthogonal-correction norm, and is computed in closed form
from the SVD of the compound matrix C = [A B]: with V2 the right singular
vectors of the d smallest singular values, partitioned into a top n x d
block V21 and a bottom d x d block V22, the minimizer is
X_hat = -V21 V22^{-1}.

The estimate is also a root of the matrix estimating function

    s(a, b; X) = a (a'X - b') - X (I_d + X'X)^{-1} (X'a - b)(a'X - b'),

and every fit records its summed-score residual as a diagnostic.
"""

from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .exceptions import DegenerateInput, NoFiniteSolution

#: Relative score-equation residual every successful fit must satisfy.
SCORE_TOL = 1e-8

#: Relative gap sigma_n - sigma_{n+1} below which the minimizer is
#: declared non-unique.
GAP_RTOL = 1e-10

#: Condition-number bound on V22 beyond which the minimizer is "at infinity".
V22_COND_MAX = 1e12


@dataclass
class EivDataset:
    """Observed input/response matrices A (m x n) and B (m x d)."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.a = np.atleast_2d(np.asarray(self.a, dtype=float))
        self.b = np.atleast_2d(np.asarray(self.b, dtype=float))
        if self.a.ndim != 2 or self.b.ndim != 2:
            raise ValueError("A and B must be 2-D arrays")
        if self.a.shape[0] != self.b.shape[0]:
            raise ValueError(
                f"A and B must have the same number of rows, "
                f"got {self.a.shape[0]} and {self.b.shape[0]}"
            )
        if self.a.shape[0] < 1 or self.a.shape[1] < 1 or self.b.shape[1] < 1:
            raise ValueError("A and B must be nonempty")
        if not (np.isfinite(self.a).all() and np.isfinite(self.b).all()):
            raise ValueError("A and B must contain only finite values")

    @property
    def m(self):
        return self.a.shape[0]

    @property
    def n(self):
        return self.a.shape[1]

    @property
    def d(self):
        return self.b.shape[1]

    def compound(self):
        """The m x (n+d) compound matrix C = [A B]."""
        return np.hstack((self.a, self.b))


@dataclass
class TlsFit:
    """TLS solution with diagnostics.

    x_hat            -- n x d estimate of X0
    singular_gap     -- sigma_n(C) - sigma_{n+1}(C), uniqueness margin
    loss_at_solution -- Q(x_hat)
    score_residual   -- ||sum_i s(a_i, b_i; x_hat)||_F
    score_scale      -- 1 + ||sum_i a_i b_i'||_F, the residual's yardstick
    """

    x_hat: np.ndarray
    singular_gap: float
    loss_at_solution: float
    score_residual: float
    score_scale: float


def _check_x(x, n, d):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.shape != (n, d):
        raise ValueError(f"X must have shape {(n, d)}, got {x.shape}")
    return x


def loss_q(a, b, x):
    """Single-row loss q(a, b; X) = (a'X - b') (I + X'X)^{-1} (X'a - b) >= 0."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    x = _check_x(x, a.shape[0], b.shape[0])
    r = x.T @ a - b
    m = np.eye(x.shape[1]) + x.T @ x
    return float(r @ np.linalg.solve(m, r))


def loss_Q(data, x):
    """Total loss Q(X) = sum_i q(a_i, b_i; X)."""
    x = _check_x(x, data.n, data.d)
    return float(kernels.loss_total(data.a, data.b, x))


def score_s(a, b, x):
    """The n x d estimating function s(a, b; X) (one observation)."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    x = _check_x(x, a.shape[0], b.shape[0])
    r = x.T @ a - b
    m = np.eye(x.shape[1]) + x.T @ x
    return np.outer(a, r) - x @ np.linalg.solve(m, np.outer(r, r))


def score_sum(data, x):
    """Sum of score_s over all rows; ~0 at the TLS solution."""
    x = _check_x(x, data.n, data.d)
    return kernels.score_total(data.a, data.b, x)


def tls_estimate(data):
    """Compute the TLS estimate of X0 from the SVD of C = [A B].

    Raises DegenerateInput when the relevant singular gap of C is below
    GAP_RTOL * sigma_1 (non-unique minimizer), and NoFiniteSolution when
    the V22 block is singular beyond V22_COND_MAX (no finite minimizer).
    """
    n, d = data.n, data.d
    c = data.compound()
    # the thin SVD already carries the complete (n+d) x (n+d) V' when
    # m >= n+d; only underdetermined inputs need the full factorization,
    # with the spectrum zero-padded so sigma_{n+1}..sigma_{n+d} exist
    _, sing, vt = np.linalg.svd(c, full_matrices=data.m < n + d)
    if sing.shape[0] < n + d:
        sing = np.concatenate([sing, np.zeros(n + d - sing.shape[0])])
    sigma1 = sing[0]
    gap = float(sing[n - 1] - sing[n])
    if gap < GAP_RTOL * max(sigma1, 1e-300):
        raise DegenerateInput(
            f"TLS minimizer is not unique: singular gap {gap:.3e} below "
            f"{GAP_RTOL:.1e} * sigma_1 = {GAP_RTOL * sigma1:.3e}",
            stage="tls_estimate",
        )
    v2 = vt[n:, :].T          # (n+d) x d, smallest-d right singular vectors
    v21 = v2[:n, :]
    v22 = v2[n:, :]
    # V2 has orthonormal columns, so ||V22||_2 <= 1 and 1/sigma_min(V22)
    # bounds its condition number; it also catches the d = 1 case where
    # the single entry is tiny but the raw condition number is 1.
    if d == 1:
        sv_min = abs(v22[0, 0])
    else:
        sv_min = np.linalg.svd(v22, compute_uv=False)[-1]
    cond = np.inf if sv_min == 0.0 else 1.0 / sv_min
    if not (cond <= V22_COND_MAX):
        raise NoFiniteSolution(
            f"V22 block is numerically singular (condition {cond:.3e}); "
            "the TLS minimizer is at infinity",
            stage="tls_estimate",
        )
    x_hat = -np.linalg.solve(v22.T, v21.T).T
    loss = float(kernels.loss_total(data.a, data.b, x_hat))
    resid = float(np.linalg.norm(kernels.score_total(data.a, data.b, x_hat)))
    scale = 1.0 + float(np.linalg.norm(data.a.T @ data.b))
    return TlsFit(
        x_hat=x_hat,
        singular_gap=gap,
        loss_at_solution=loss,
        score_residual=resid,
        score_scale=scale,
    )
