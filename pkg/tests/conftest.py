"""Shared helpers for the test suite."""

import numpy as np

from eivgof import EivDataset


def simulate_dataset(m, x0, sigma=0.1, mu_a=None, seed=0, law="normal"):
    """A well-specified errors-in-variables dataset with known truth.

    Returns (data, a0): observed dataset and the latent design matrix.
    """
    x0 = np.asarray(x0, dtype=float)
    n, d = x0.shape
    rng = np.random.default_rng(seed)
    if mu_a is None:
        mu_a = np.ones(n)
    a0 = mu_a + rng.standard_normal((m, n))
    if law == "normal":
        e = rng.normal(0.0, sigma, (m, n + d))
    else:
        half = sigma * np.sqrt(3.0)
        e = rng.uniform(-half, half, (m, n + d))
    return EivDataset(a0 + e[:, :n], a0 @ x0 + e[:, n:]), a0


def ks_distance(samples, cdf):
    """Kolmogorov-Smirnov distance between a sample and a CDF callable."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.shape[0]
    f = np.asarray([cdf(v) for v in x], dtype=float)
    upper = np.abs(np.arange(1, n + 1) / n - f).max()
    lower = np.abs(np.arange(0, n) / n - f).max()
    return float(max(upper, lower))
