"""Benchmark the numba kernels against the pure-numpy fallback.

Imports both kernel modules directly (bypassing the env-var dispatch),
asserts they agree, then times the row kernels at several dataset sizes
and the chi-squared quantile in a loop.

Run:  python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from eivgof import _kernels_numba as knb
from eivgof import _kernels_numpy as knp

N, D = 3, 2
SIZES = (1_000, 10_000, 100_000)
REPEAT = 20


def scalar(x):
    return float(np.asarray(x).sum())


def check_agreement(rng):
    a = rng.normal(size=(500, N))
    b = rng.normal(size=(500, D))
    x = rng.normal(size=(N, D))
    w = rng.normal(size=N)
    assert abs(knb.loss_total(a, b, x) - knp.loss_total(a, b, x)) < 1e-9
    assert np.allclose(knb.score_total(a, b, x), knp.score_total(a, b, x), atol=1e-9)
    assert np.allclose(knb.sandwich_mean(a, b, x, w), knp.sandwich_mean(a, b, x, w), atol=1e-12)
    for df in (1, 2, 5):
        for alpha in (0.2, 0.05, 0.01):
            q_nb = knb.chi2_upper_quantile(alpha, df)
            q_np = knp.chi2_upper_quantile(alpha, df)
            assert abs(q_nb - q_np) < 1e-10
        for xx in (0.5, 3.0, 12.0):
            assert abs(knb.chi2_sf(xx, df) - knp.chi2_sf(xx, df)) < 1e-14
            assert abs(
                knb.noncentral_chi2_sf(xx, df, 4.0) - knp.noncentral_chi2_sf(xx, df, 4.0)
            ) < 1e-13
    assert np.array_equal(knb.halton(0, 100, 5), knp.halton(0, 100, 5))
    print("backends agree on all kernels")


def best_of(fn, repeat=REPEAT):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_rows(rng):
    print(f"\n{'kernel':<14}{'m':>9}{'numpy':>12}{'numba':>12}{'speedup':>9}")
    for m in SIZES:
        a = rng.normal(size=(m, N))
        b = rng.normal(size=(m, D))
        x = rng.normal(size=(N, D))
        w = rng.normal(size=N)
        cases = (
            ("loss_total", lambda k: k.loss_total(a, b, x)),
            ("score_total", lambda k: k.score_total(a, b, x)),
            ("sandwich_mean", lambda k: k.sandwich_mean(a, b, x, w)),
        )
        for name, call in cases:
            call(knb)  # trigger compilation outside the timed region
            t_np = best_of(lambda: call(knp))
            t_nb = best_of(lambda: call(knb))
            print(f"{name:<14}{m:>9}{t_np * 1e6:>10.1f}us{t_nb * 1e6:>10.1f}us{t_np / t_nb:>8.1f}x")


def bench_quantile():
    alphas = np.linspace(0.01, 0.49, 400)

    def loop(k):
        acc = 0.0
        for alpha in alphas:
            acc += k.chi2_upper_quantile(float(alpha), 2)
        return acc

    loop(knb)
    t_np = best_of(lambda: loop(knp), repeat=5)
    t_nb = best_of(lambda: loop(knb), repeat=5)
    print(
        f"\nchi2_upper_quantile x{len(alphas)}: "
        f"numpy {t_np * 1e3:.2f}ms  numba {t_nb * 1e3:.2f}ms  {t_np / t_nb:.1f}x"
    )


def main():
    rng = np.random.default_rng(1234)
    check_agreement(rng)
    bench_rows(rng)
    bench_quantile()


if __name__ == "__main__":
    main()
