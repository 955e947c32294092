"""Data generation and Monte Carlo studies for the fit test.

Simulations follow the functional-model convention: the true design A0 is
drawn once per (design spec, m) and held fixed while the measurement
errors are resampled across replicates.  Per-replicate error streams are
derived counter-style from (master_seed, rep_index), so results are
independent of execution order and worker count; reports are reduced in
replicate order and reproduce bit-for-bit.

Local alternatives perturb the noiseless responses by g(a0_i)/sqrt(m).
Their asymptotic effect on the test is the noncentrality

    tau = || Sigma_T^{-1/2} C_T ||,
    C_T = M(g(a0)) - M(g(a0) a0') V_A^{-1} mu_a,

where M( ) denotes the limit of design averages; `theoretical_tau`
evaluates it either in closed form (constant g) or from a large design
realization.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import EivGofError
from .gof import REJECT, run_test
from .linalg_stats import (
    chi2_upper_quantile,
    noncentral_chi2_sf,
    pd_solve,
    symmetrize,
)
from ._backend import kernels
from .nuisance import estimate_nuisance, sandwich
from .tls import EivDataset, score_sum, tls_estimate

DESIGN_KINDS = ("frozen_gaussian", "lattice")
ERROR_LAWS = ("normal", "uniform")


@dataclass
class DesignSpec:
    """Nonrandom design specification: kind, dimension, mean and covariance.

    frozen_gaussian rows are N(mu_a, s_a) draws from a stream seeded by
    design_seed alone, so designs at different m are nested prefixes of one
    stream; lattice rows are Halton points mapped to mean mu_a and
    covariance s_a (design_seed is ignored -- the lattice is canonical).
    """

    kind: str
    n: int
    mu_a: np.ndarray
    s_a: np.ndarray
    design_seed: int = 0

    def __post_init__(self):
        kind = str(self.kind).strip().lower().replace("-", "_")
        if kind == "frozengaussian":
            kind = "frozen_gaussian"
        if kind not in DESIGN_KINDS:
            raise ValueError(f"design kind must be one of {DESIGN_KINDS}, got {self.kind!r}")
        self.kind = kind
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"design n must be a positive integer, got {self.n!r}")
        self.n = int(self.n)
        self.mu_a = np.asarray(self.mu_a, dtype=float).reshape(-1)
        if self.mu_a.shape != (self.n,):
            raise ValueError(f"mu_a must have length n = {self.n}, got {self.mu_a.shape}")
        self.s_a = np.asarray(self.s_a, dtype=float)
        if self.s_a.shape != (self.n, self.n):
            raise ValueError(f"s_a must be {self.n} x {self.n}, got {self.s_a.shape}")
        if np.abs(self.s_a - self.s_a.T).max() > 0:
            self.s_a = symmetrize(self.s_a)
        try:
            self._chol = np.linalg.cholesky(self.s_a)
        except np.linalg.LinAlgError:
            raise ValueError("s_a must be positive definite") from None
        if int(self.design_seed) != self.design_seed or self.design_seed < 0:
            raise ValueError(f"design_seed must be a nonnegative integer, got {self.design_seed!r}")
        self.design_seed = int(self.design_seed)

    def v_a(self):
        """Limiting second-moment matrix V_A = S_a + mu_a mu_a'."""
        return self.s_a + np.outer(self.mu_a, self.mu_a)


@dataclass
class ErrorSpec:
    """Error law for both input and response noise: i.i.d., mean 0, variance sigma^2."""

    law: str
    sigma: float

    def __post_init__(self):
        law = str(self.law).strip().lower()
        if law in ("uniform_symmetric", "uniformsymmetric"):
            law = "uniform"
        if law not in ERROR_LAWS:
            raise ValueError(f"error law must be one of {ERROR_LAWS}, got {self.law!r}")
        self.law = law
        self.sigma = float(self.sigma)
        if not (self.sigma > 0.0) or not math.isfinite(self.sigma):
            raise ValueError(f"sigma must be > 0, got {self.sigma!r}")

    def draw(self, rng, shape):
        if self.law == "normal":
            return rng.normal(0.0, self.sigma, size=shape)
        half = self.sigma * math.sqrt(3.0)
        return rng.uniform(-half, half, size=shape)


@dataclass
class ConstantAlternative:
    """Perturbation g(a) = c, a fixed d-vector shift."""

    c: np.ndarray
    kind: str = field(default="constant", init=False)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        if not np.isfinite(self.c).all():
            raise ValueError("c must be finite")

    @property
    def d(self):
        return self.c.shape[0]

    def g(self, a0):
        return np.broadcast_to(self.c, (a0.shape[0], self.c.shape[0])).copy()


@dataclass
class QuadraticAlternative:
    """Perturbation g(a) = v * (a' Q a), a quadratic-form bump along v."""

    v: np.ndarray
    q: np.ndarray
    kind: str = field(default="quadratic", init=False)

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=float).reshape(-1)
        self.q = symmetrize(np.asarray(self.q, dtype=float))
        if self.q.shape[0] != self.q.shape[1]:
            raise ValueError("Q must be square")
        if not (np.isfinite(self.v).all() and np.isfinite(self.q).all()):
            raise ValueError("v and Q must be finite")

    @property
    def d(self):
        return self.v.shape[0]

    def g(self, a0):
        s = np.einsum("ij,jk,ik->i", a0, self.q, a0)
        return s[:, None] * self.v[None, :]


@dataclass
class SimConfig:
    """Everything a Monte Carlo study needs; immutable by convention."""

    design: DesignSpec
    errors: ErrorSpec
    x0: np.ndarray
    m: int
    reps: int
    alpha: float
    master_seed: int
    alternative: object = None

    def __post_init__(self):
        self.x0 = np.asarray(self.x0, dtype=float)
        if self.x0.ndim == 1:
            self.x0 = self.x0.reshape(-1, 1)
        if self.x0.ndim != 2 or self.x0.shape[0] != self.design.n:
            raise ValueError(
                f"x0 must be {self.design.n} x d, got shape {self.x0.shape}"
            )
        if not np.isfinite(self.x0).all():
            raise ValueError("x0 must be finite")
        n, d = self.x0.shape
        if int(self.m) != self.m or self.m < n + d:
            raise ValueError(f"m must be an integer >= n + d = {n + d}, got {self.m!r}")
        self.m = int(self.m)
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValueError(f"reps must be a positive integer, got {self.reps!r}")
        self.reps = int(self.reps)
        self.alpha = float(self.alpha)
        if not (0.0 < self.alpha < 0.5):
            raise ValueError(f"alpha must lie in (0, 1/2), got {self.alpha!r}")
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise ValueError(
                f"master_seed must be a nonnegative integer, got {self.master_seed!r}"
            )
        self.master_seed = int(self.master_seed)
        if self.alternative is not None and self.alternative.d != d:
            raise ValueError(
                f"alternative dimension {self.alternative.d} does not match d = {d}"
            )

    @property
    def d(self):
        return self.x0.shape[1]


@dataclass
class LevelReport:
    reject_rate: float
    failed_runs: int
    t2_samples: list
    t2_by_rep: list = None  # one entry per replicate, None where the run failed


@dataclass
class PowerReport:
    reject_rate: float
    failed_runs: int
    t2_samples: list
    tau_theoretical: float
    power_theoretical: float
    t2_by_rep: list = None


@dataclass
class CltReport:
    m_values: tuple
    median_residuals: list
    sandwich_rel_error: float
    reps: int


def generate_design(spec, m):
    """Deterministic m x n design matrix for (spec, m); see DesignSpec."""
    if int(m) != m or m < 1:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    m = int(m)
    if spec.kind == "frozen_gaussian":
        rng = np.random.default_rng(np.random.SeedSequence(spec.design_seed))
        z = rng.standard_normal((m, spec.n))
    else:
        u = kernels.halton(0, m, spec.n)
        z = math.sqrt(12.0) * (u - 0.5)
    return spec.mu_a + z @ spec._chol.T


def _error_rng(master_seed, rep_index):
    # counter-based stream: the pair (master_seed, rep_index) fully
    # determines the replicate, independent of scheduling
    return np.random.default_rng(np.random.SeedSequence((master_seed, rep_index)))


def _replicate_dataset(config, a0, rep_index, use_alternative):
    if int(rep_index) != rep_index or rep_index < 0:
        raise ValueError(f"rep_index must be a nonnegative integer, got {rep_index!r}")
    rng = _error_rng(config.master_seed, int(rep_index))
    n, d = config.design.n, config.d
    e = config.errors.draw(rng, (config.m, n + d))
    b0 = a0 @ config.x0
    if use_alternative:
        b0 = b0 + config.alternative.g(a0) / math.sqrt(config.m)
    return EivDataset(a0 + e[:, :n], b0 + e[:, n:])


def generate_h0(config, rep_index):
    """One replicate dataset under the null: A = A0 + E_a, B = A0 X0 + E_b."""
    a0 = generate_design(config.design, config.m)
    return _replicate_dataset(config, a0, rep_index, use_alternative=False)


def generate_h1m(config, rep_index):
    """One replicate under the local alternative: B gains g(A0)/sqrt(m)."""
    if config.alternative is None:
        raise ValueError("generate_h1m requires config.alternative")
    a0 = generate_design(config.design, config.m)
    return _replicate_dataset(config, a0, rep_index, use_alternative=True)


def theoretical_tau(design, alt, x0, sigma2, sigma_t=None, m_limit=10**6):
    """Asymptotic noncentrality tau = ||Sigma_T^{-1/2} C_T||.

    C_T is evaluated in closed form for a constant g (c (1 - mu'V^{-1}mu))
    and otherwise by averaging over a size-m_limit design realization.
    sigma_t is the limiting test covariance; when omitted it is available
    in closed form only for mu_a = 0, where Sigma_T = sigma2 (I + x0'x0).
    """
    x0 = np.asarray(x0, dtype=float)
    sigma2 = float(sigma2)
    if sigma2 < 0.0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2!r}")
    d = x0.shape[1]
    mu = design.mu_a
    if sigma_t is None:
        if np.linalg.norm(mu) != 0.0:
            raise ValueError(
                "sigma_t is required when mu_a != 0 (no closed form); "
                "see asymptotic_sigma_t"
            )
        sigma_t = sigma2 * (np.eye(d) + x0.T @ x0)
    if alt is None:
        return 0.0
    v_a = design.v_a()
    if isinstance(alt, ConstantAlternative):
        c_t = alt.c * (1.0 - float(mu @ pd_solve(v_a, mu)))
    else:
        a0 = generate_design(design, int(m_limit))
        g = alt.g(a0)
        mg = g.mean(axis=0)
        mga = g.T @ a0 / a0.shape[0]
        c_t = mg - mga @ pd_solve(v_a, mu)
    return float(math.sqrt(max(0.0, float(c_t @ pd_solve(sigma_t, c_t)))))


def asymptotic_sigma_t(config, m_limit=200_000):
    """Limiting Sigma_T at the true parameters.

    The leading term is exact; the sandwich limit S(mu_a) is approximated
    by one size-m_limit replicate evaluated at the true X0, V_A, mu_a
    (and is exactly zero when mu_a = 0).
    """
    design, x0 = config.design, config.x0
    sigma2 = config.errors.sigma ** 2
    mu = design.mu_a
    v_a = design.v_a()
    d = config.d
    lead = sigma2 * (1.0 - 2.0 * float(mu @ pd_solve(v_a, mu)))
    if np.linalg.norm(mu) == 0.0:
        s_part = np.zeros((d, d))
    else:
        m_limit = int(m_limit)
        a0 = generate_design(design, m_limit)
        rng = np.random.default_rng(
            np.random.SeedSequence((config.master_seed, 0, 0))
        )
        n = design.n
        e = config.errors.draw(rng, (m_limit, n + d))
        data = EivDataset(a0 + e[:, :n], a0 @ x0 + e[:, n:])
        s_part = sandwich(data, x0, v_a, mu)
    return symmetrize(lead * (np.eye(d) + x0.T @ x0) + s_part)


def _map_ordered(func, count, threads):
    if threads <= 1:
        return [func(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, range(count)))


def _mc_rates(config, threads, use_alternative):
    a0 = generate_design(config.design, config.m)

    def one(i):
        data = _replicate_dataset(config, a0, i, use_alternative)
        try:
            report = run_test(data, config.alpha)
        except EivGofError:
            return None
        return (report.t2, report.decision == REJECT)

    outcomes = _map_ordered(one, config.reps, threads)
    t2_by_rep = [None if o is None else o[0] for o in outcomes]
    t2_samples = [o[0] for o in outcomes if o is not None]
    rejects = sum(1 for o in outcomes if o is not None and o[1])
    failed = sum(1 for o in outcomes if o is None)
    successes = config.reps - failed
    rate = rejects / successes if successes > 0 else 0.0
    return rate, failed, t2_samples, t2_by_rep


def monte_carlo_level(config, threads=1):
    """Empirical level study under H0; failures are tallied, not silently dropped."""
    if config.alternative is not None:
        raise ValueError("level study is defined under H0; remove the alternative")
    rate, failed, t2_samples, t2_by_rep = _mc_rates(config, threads, use_alternative=False)
    return LevelReport(
        reject_rate=rate, failed_runs=failed, t2_samples=t2_samples, t2_by_rep=t2_by_rep
    )


def monte_carlo_power(config, threads=1, m_limit=10**6):
    """Empirical power under H_{1,m} with its theoretical noncentral target."""
    if config.alternative is None:
        raise ValueError("power study requires config.alternative")
    rate, failed, t2_samples, t2_by_rep = _mc_rates(config, threads, use_alternative=True)
    sigma_t = asymptotic_sigma_t(config, m_limit=min(int(m_limit), 200_000))
    tau = theoretical_tau(
        config.design,
        config.alternative,
        config.x0,
        config.errors.sigma ** 2,
        sigma_t,
        m_limit=m_limit,
    )
    d = config.d
    power = noncentral_chi2_sf(chi2_upper_quantile(config.alpha, d), d, tau)
    return PowerReport(
        reject_rate=rate,
        failed_runs=failed,
        t2_samples=t2_samples,
        tau_theoretical=tau,
        power_theoretical=power,
        t2_by_rep=t2_by_rep,
    )


def validate_estimator_clt(config, m_values=(500, 2000, 8000), threads=1):
    """Sampling checks of the estimator's linearization.

    (a) at config.m: the sample covariance of sqrt(m) (x_hat - x0)' mu_a
        across replicates is compared with the replicate-averaged sandwich
        estimate S(mu_a_hat); their relative Frobenius gap is reported.
    (b) at each m in m_values (same design seed, so designs are matched):
        the median over replicates of || sqrt(m)(x_hat - x0) +
        V_A^{-1} (1/sqrt(m)) sum_i s(a_i, b_i; x0) ||_F, which should
        shrink as m grows.
    """
    if config.alternative is not None:
        raise ValueError("CLT validation is defined under H0; remove the alternative")
    mu = config.design.mu_a
    v_a = config.design.v_a()
    x0 = config.x0

    a0_main = generate_design(config.design, config.m)

    def one_main(i):
        data = _replicate_dataset(config, a0_main, i, use_alternative=False)
        try:
            fit = tls_estimate(data)
            nuis = estimate_nuisance(data, fit.x_hat)
            s_hat = sandwich(data, fit.x_hat, nuis.va_hat, nuis.mu_a_hat)
        except EivGofError:
            return None
        proj = math.sqrt(config.m) * (fit.x_hat - x0).T @ mu
        return proj, s_hat

    pairs = [p for p in _map_ordered(one_main, config.reps, threads) if p is not None]
    if len(pairs) < 2:
        raise ValueError("too few successful replicates for a covariance comparison")
    projs = np.array([p[0] for p in pairs])
    s_mean = np.mean([p[1] for p in pairs], axis=0)
    cov_emp = np.cov(projs, rowvar=False).reshape(s_mean.shape)
    denom = np.linalg.norm(cov_emp)
    rel_err = float(np.linalg.norm(s_mean - cov_emp) / denom) if denom > 0 else 0.0

    medians = []
    for m in m_values:
        sub = replace(config, m=int(m))
        a0 = generate_design(sub.design, sub.m)

        def one_trend(i, sub=sub, a0=a0):
            data = _replicate_dataset(sub, a0, i, use_alternative=False)
            try:
                fit = tls_estimate(data)
            except EivGofError:
                return None
            expansion = pd_solve(v_a, score_sum(data, x0)) / math.sqrt(sub.m)
            resid = math.sqrt(sub.m) * (fit.x_hat - x0) + expansion
            return float(np.linalg.norm(resid))

        norms = [v for v in _map_ordered(one_trend, sub.reps, threads) if v is not None]
        medians.append(float(np.median(norms)))

    return CltReport(
        m_values=tuple(int(m) for m in m_values),
        median_residuals=medians,
        sandwich_rel_error=rel_err,
        reps=config.reps,
    )
