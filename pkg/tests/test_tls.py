import numpy as np
import pytest

from conftest import simulate_dataset
from eivgof import (
    DegenerateInput,
    EivDataset,
    NoFiniteSolution,
    loss_Q,
    loss_q,
    score_s,
    score_sum,
    tls_estimate,
)


def golden_section_min(fn, lo, hi):
    """Golden-section search for a scalar minimizer; independent TLS oracle.

    Comparing raw function values cannot localize a smooth minimum below
    ~sqrt(eps)*scale (value differences drown in roundoff), which sits
    right at the 1e-9 tolerance this oracle must support.  So the golden
    phase only brackets the minimizer to 1e-4, after which we bisect on
    the sign of a central-difference slope -- still nothing but fn
    evaluations -- which pins the argmin to ~1e-12.
    """
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while abs(b - a) > 1e-4:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    h = 1e-6
    for _ in range(60):
        mid = 0.5 * (a + b)
        if fn(mid + h) - fn(mid - h) > 0.0:
            b = mid
        else:
            a = mid
    return 0.5 * (a + b)


class TestEivDataset:
    def test_shapes_and_properties(self):
        data = EivDataset(np.ones((5, 3)), np.ones((5, 2)))
        assert (data.m, data.n, data.d) == (5, 3, 2)
        assert data.compound().shape == (5, 5)

    def test_row_mismatch(self):
        with pytest.raises(ValueError):
            EivDataset(np.ones((4, 2)), np.ones((5, 1)))

    def test_nonfinite_rejected(self):
        a = np.ones((3, 2))
        b = np.ones((3, 1))
        b[1, 0] = np.nan
        with pytest.raises(ValueError):
            EivDataset(a, b)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            EivDataset(np.ones((3, 0)), np.ones((3, 1)))


class TestLossQ:
    def test_x_zero_gives_b_norm(self):
        a = np.array([1.0, -2.0])
        b = np.array([3.0, 0.5])
        assert loss_q(a, b, np.zeros((2, 2))) == pytest.approx(b @ b, abs=1e-14)

    def test_scalar_arithmetic(self):
        # (2*1 - 1) * 1/(1+1) * (2*1 - 1) = 0.5
        assert loss_q([2.0], [1.0], [[1.0]]) == pytest.approx(0.5, abs=1e-15)

    def test_exact_fit_row_is_zero(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            x = rng.standard_normal((3, 2))
            a = rng.standard_normal(3)
            assert loss_q(a, x.T @ a, x) == pytest.approx(0.0, abs=1e-20)

    def test_nonnegative(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            val = loss_q(
                rng.standard_normal(2),
                rng.standard_normal(2),
                rng.standard_normal((2, 2)),
            )
            assert val >= 0.0

    def test_total_is_sum_of_rows(self):
        rng = np.random.default_rng(5)
        data = EivDataset(rng.standard_normal((20, 3)), rng.standard_normal((20, 2)))
        x = rng.standard_normal((3, 2))
        total = sum(loss_q(data.a[i], data.b[i], x) for i in range(20))
        assert loss_Q(data, x) == pytest.approx(total, rel=1e-12)


class TestScoreS:
    def test_x_zero(self):
        a = np.array([1.0, 2.0])
        b = np.array([3.0])
        assert np.allclose(score_s(a, b, np.zeros((2, 1))), -np.outer(a, b), atol=1e-15)

    def test_exact_fit_vanishes(self):
        rng = np.random.default_rng(6)
        x = rng.standard_normal((3, 2))
        a = rng.standard_normal(3)
        assert np.abs(score_s(a, x.T @ a, x)).max() == pytest.approx(0.0, abs=1e-18)

    def test_scalar_arithmetic(self):
        # 1*(1-0) - 1*(1/2)*(1-0)*(1-0) = 0.5
        assert score_s([1.0], [0.0], [[1.0]])[0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_sum_matches_rows(self):
        rng = np.random.default_rng(7)
        data = EivDataset(rng.standard_normal((15, 2)), rng.standard_normal((15, 2)))
        x = rng.standard_normal((2, 2))
        total = sum(score_s(data.a[i], data.b[i], x) for i in range(15))
        assert np.allclose(score_sum(data, x), total, atol=1e-12)

    def test_gradient_identity(self):
        # dQ/dX = 2 * (sum s) * (I + X'X)^{-1}, checked by central differences
        rng = np.random.default_rng(8)
        data = EivDataset(rng.standard_normal((25, 3)), rng.standard_normal((25, 2)))
        x = 0.5 * rng.standard_normal((3, 2))
        m = np.eye(2) + x.T @ x
        analytic = 2.0 * score_sum(data, x) @ np.linalg.inv(m)
        h = 1e-6
        for i in range(3):
            for j in range(2):
                xp, xm = x.copy(), x.copy()
                xp[i, j] += h
                xm[i, j] -= h
                fd = (loss_Q(data, xp) - loss_Q(data, xm)) / (2.0 * h)
                assert fd == pytest.approx(
                    analytic[i, j], rel=1e-6, abs=1e-8
                )


class TestTlsEstimate:
    def test_noise_free_recovery(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            x0 = rng.standard_normal((3, 2))
            a0 = rng.standard_normal((40, 3))
            data = EivDataset(a0, a0 @ x0)
            fit = tls_estimate(data)
            assert np.abs(fit.x_hat - x0).max() < 1e-10
            assert fit.loss_at_solution <= 1e-18 * max(1.0, np.sum(a0 * a0))

    def test_scalar_golden_section_oracle(self):
        a = np.array([[1.0], [2.0], [3.0], [4.0]])
        b = np.array([[2.0], [3.9], [6.1], [8.0]])
        data = EivDataset(a, b)
        fit = tls_estimate(data)
        oracle = golden_section_min(lambda x: loss_Q(data, [[x]]), -10.0, 10.0)
        assert abs(fit.x_hat[0, 0] - oracle) <= 1e-9

    def test_loss_equals_tail_singular_values(self):
        # Q(x_hat) = sum of the d smallest squared singular values of [A B]
        rng = np.random.default_rng(10)
        for _ in range(10):
            data, _ = simulate_dataset(60, rng.standard_normal((3, 2)), sigma=0.3,
                                       seed=int(rng.integers(1 << 31)))
            fit = tls_estimate(data)
            s = np.linalg.svd(data.compound(), compute_uv=False)
            tail = float(np.sum(s[3:] ** 2))
            assert fit.loss_at_solution == pytest.approx(tail, rel=1e-10)

    def test_score_root_residual(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            data, _ = simulate_dataset(
                50, rng.standard_normal((2, 2)), sigma=0.4,
                seed=int(rng.integers(1 << 31)),
            )
            fit = tls_estimate(data)
            assert fit.score_residual <= 1e-8 * fit.score_scale
            assert np.linalg.norm(score_sum(data, fit.x_hat)) == pytest.approx(
                fit.score_residual, rel=1e-9, abs=1e-12
            )

    def test_local_minimality_probes(self):
        rng = np.random.default_rng(12)
        data, _ = simulate_dataset(20, rng.standard_normal((2, 1)), sigma=0.5, seed=99)
        fit = tls_estimate(data)
        q_star = loss_Q(data, fit.x_hat)
        for _ in range(100):
            delta = rng.standard_normal((2, 1))
            delta *= 1e-2 / np.linalg.norm(delta)
            assert q_star <= loss_Q(data, fit.x_hat + delta) + 1e-12

    def test_degenerate_input(self):
        # C = I_2: equal singular values straddle the n/(n+1) split, so the
        # minimizer is not unique
        data = EivDataset(np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]))
        with pytest.raises(DegenerateInput):
            tls_estimate(data)

    def test_no_finite_solution(self):
        # A identically zero: the fitted subspace is vertical, X_hat = infinity
        data = EivDataset(np.zeros((4, 1)), np.array([[1.0], [2.0], [0.5], [1.5]]))
        with pytest.raises(NoFiniteSolution):
            tls_estimate(data)

    def test_orthogonal_input_equivariance(self):
        rng = np.random.default_rng(13)
        data, _ = simulate_dataset(80, rng.standard_normal((3, 2)), sigma=0.2, seed=55)
        r, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        fit0 = tls_estimate(data)
        fit_r = tls_estimate(EivDataset(data.a @ r, data.b))
        assert np.allclose(fit_r.x_hat, r.T @ fit0.x_hat, atol=1e-8)

    def test_singular_gap_matches_svd(self):
        rng = np.random.default_rng(14)
        data, _ = simulate_dataset(30, rng.standard_normal((2, 2)), sigma=0.3, seed=77)
        fit = tls_estimate(data)
        s = np.linalg.svd(data.compound(), compute_uv=False)
        assert fit.singular_gap == pytest.approx(s[1] - s[2], rel=1e-12)
