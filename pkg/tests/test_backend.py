import json
import os
import subprocess
import sys

import numpy as np
import pytest

from eivgof import _kernels_numpy

try:
    from eivgof import _kernels_numba
except ImportError:  # pragma: no cover - numba is installed in CI
    _kernels_numba = None

requires_numba = pytest.mark.skipif(
    _kernels_numba is None, reason="numba backend unavailable"
)


def _random_problem(rng, m=60, n=3, d=2):
    a = rng.normal(1.0, 1.0, (m, n))
    x = rng.standard_normal((n, d))
    b = a @ x + rng.normal(0.0, 0.3, (m, d))
    return a, b, x


@requires_numba
class TestKernelEquivalence:
    def test_loss_total(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            a, b, x = _random_problem(rng)
            v_np = _kernels_numpy.loss_total(a, b, x)
            v_nb = _kernels_numba.loss_total(a, b, x)
            assert v_nb == pytest.approx(v_np, rel=1e-12)

    def test_score_total(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            a, b, x = _random_problem(rng)
            s_np = _kernels_numpy.score_total(a, b, x)
            s_nb = _kernels_numba.score_total(a, b, x)
            scale = np.abs(s_np).max() + 1.0
            assert np.abs(s_nb - s_np).max() < 1e-10 * scale

    def test_sandwich_mean(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            a, b, x = _random_problem(rng)
            w = rng.standard_normal(a.shape[1])
            s_np = _kernels_numpy.sandwich_mean(a, b, x, w)
            s_nb = _kernels_numba.sandwich_mean(a, b, x, w)
            scale = np.abs(s_np).max() + 1e-300
            assert np.abs(s_nb - s_np).max() < 1e-11 * scale

    def test_chi2_functions(self):
        for df in (1, 2, 3, 7, 12):
            for x in (0.0, 0.3, 1.7, 5.0, 23.0, 80.0):
                assert _kernels_numba.chi2_sf(x, df) == pytest.approx(
                    _kernels_numpy.chi2_sf(x, df), rel=1e-12, abs=1e-300
                )
            for alpha in (0.01, 0.05, 0.25, 0.49):
                assert _kernels_numba.chi2_upper_quantile(alpha, df) == pytest.approx(
                    _kernels_numpy.chi2_upper_quantile(alpha, df), rel=1e-11
                )
            for lam in (0.0, 0.5, 4.0, 25.0):
                for x in (0.5, 3.0, 11.0):
                    assert _kernels_numba.noncentral_chi2_sf(
                        x, df, lam
                    ) == pytest.approx(
                        _kernels_numpy.noncentral_chi2_sf(x, df, lam), rel=1e-11
                    )

    def test_halton(self):
        u_np = _kernels_numpy.halton(0, 200, 4)
        u_nb = _kernels_numba.halton(0, 200, 4)
        assert np.abs(u_np - u_nb).max() < 1e-14


def _run_with_backend(env_value, code):
    env = dict(os.environ)
    if env_value is None:
        env.pop("EIV_GOF_BACKEND", None)
    else:
        env["EIV_GOF_BACKEND"] = env_value
    return subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True, env=env,
    )


class TestBackendDispatch:
    def test_forced_numpy(self):
        proc = _run_with_backend("numpy", "import eivgof; print(eivgof.BACKEND)")
        assert proc.returncode == 0
        assert proc.stdout.strip() == "numpy"

    @requires_numba
    def test_forced_numba(self):
        proc = _run_with_backend("numba", "import eivgof; print(eivgof.BACKEND)")
        assert proc.returncode == 0
        assert proc.stdout.strip() == "numba"

    def test_auto_selects_some_backend(self):
        proc = _run_with_backend(None, "import eivgof; print(eivgof.BACKEND)")
        assert proc.returncode == 0
        assert proc.stdout.strip() in ("numpy", "numba")

    def test_invalid_backend_rejected(self):
        proc = _run_with_backend("fortran", "import eivgof")
        assert proc.returncode != 0
        assert "EIV_GOF_BACKEND" in proc.stderr

    @requires_numba
    def test_t2_agrees_across_backends(self):
        # the full pipeline must produce the same statistic under either
        # backend; run each in a fresh interpreter so the env flag binds
        code = """
import json
import numpy as np
import eivgof

rng = np.random.default_rng(123)
a0 = 1.0 + rng.standard_normal((500, 2))
x0 = np.array([[1.0], [0.5]])
data = eivgof.EivDataset(
    a0 + rng.normal(0.0, 0.2, (500, 2)),
    a0 @ x0 + rng.normal(0.0, 0.2, (500, 1)),
)
report = eivgof.run_test(data, alpha=0.05)
print(json.dumps({"backend": eivgof.BACKEND, "t2": report.t2,
                  "p": report.p_value, "loss": report.fit.loss_at_solution}))
"""
        results = {}
        for backend in ("numpy", "numba"):
            proc = _run_with_backend(backend, code)
            assert proc.returncode == 0, proc.stderr
            payload = json.loads(proc.stdout)
            assert payload["backend"] == backend
            results[backend] = payload
        assert results["numpy"]["t2"] == pytest.approx(
            results["numba"]["t2"], rel=1e-9
        )
        assert results["numpy"]["loss"] == pytest.approx(
            results["numba"]["loss"], rel=1e-10
        )
        assert results["numpy"]["p"] == pytest.approx(
            results["numba"]["p"], rel=1e-9
        )
