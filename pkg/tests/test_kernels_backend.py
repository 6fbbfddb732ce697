"""Agreement between the compiled kernels and the numpy fallback."""

import subprocess
import sys

import numpy as np
import pytest

from bora import _gram_np, kernels

try:
    from bora import _gram_cy
except ImportError:
    _gram_cy = None

needs_compiled = pytest.mark.skipif(_gram_cy is None, reason="compiled backend not built")


def _random_se_case(rng):
    n, n2, d = int(rng.integers(1, 40)), int(rng.integers(1, 40)), int(rng.integers(1, 8))
    x = rng.normal(0.0, 2.0, (n, d))
    z = rng.normal(0.0, 2.0, (n2, d))
    ell = rng.uniform(0.2, 3.0, d)
    sf = float(rng.uniform(0.1, 4.0))
    return x, z, ell, sf


class TestBackendSelection:
    def test_backend_is_known(self):
        assert kernels.BACKEND in ("cython", "numpy")

    def test_force_numpy_env_var(self):
        code = (
            "import os; os.environ['BORA_FORCE_NUMPY'] = '1'; "
            "from bora import kernels; print(kernels.BACKEND)"
        )
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, check=True
        )
        assert out.stdout.strip() == "numpy"


@needs_compiled
class TestCrossGramParity:
    def test_se_cross_gram(self, rng):
        for _ in range(30):
            x, z, ell, sf = _random_se_case(rng)
            a = _gram_np.se_cross_gram(x, z, ell, sf)
            b = _gram_cy.se_cross_gram(x, z, ell, sf)
            assert np.max(np.abs(a - b)) < 1e-12

    def test_wse_cross_gram(self, rng):
        for _ in range(30):
            n, n2, m = int(rng.integers(1, 40)), int(rng.integers(1, 40)), int(rng.integers(2, 10))
            a_rows = rng.dirichlet(np.ones(m), n)
            b_rows = rng.dirichlet(np.ones(m), n2)
            p = float(rng.choice([1.0, 2.0, 3.0]))
            lam = float(rng.uniform(0.2, 2.0))
            sf = float(rng.uniform(0.1, 4.0))
            a = _gram_np.wse_cross_gram(a_rows, b_rows, p, lam, sf)
            b = _gram_cy.wse_cross_gram(a_rows, b_rows, p, lam, sf)
            assert np.max(np.abs(a - b)) < 1e-12


@needs_compiled
class TestLikelihoodParity:
    def test_lml_se(self, rng):
        for _ in range(25):
            n, d = int(rng.integers(2, 50)), int(rng.integers(1, 8))
            x = rng.normal(0.0, 1.0, (n, d))
            diff = x[:, None, :] - x[None, :, :]
            d2 = np.ascontiguousarray(diff * diff)
            inv_ell2 = 1.0 / rng.uniform(0.2, 2.0, d) ** 2
            sf = float(rng.uniform(0.2, 2.0))
            sn = float(rng.uniform(1e-4, 0.5))
            y = rng.normal(0.0, 1.0, n)
            a = _gram_np.lml_se(d2, inv_ell2, sf, sn, y)
            b = _gram_cy.lml_se(d2, inv_ell2, sf, sn, y)
            assert a == pytest.approx(b, abs=1e-10)

    def test_lml_wse(self, rng):
        for _ in range(25):
            n, m = int(rng.integers(2, 50)), int(rng.integers(2, 8))
            w = rng.dirichlet(np.ones(m), n)
            tv = np.ascontiguousarray(0.5 * np.abs(w[:, None, :] - w[None, :, :]).sum(-1))
            lam = float(rng.uniform(0.3, 2.0))
            sf = float(rng.uniform(0.2, 2.0))
            sn = float(rng.uniform(1e-3, 0.5))
            y = rng.normal(0.0, 1.0, n)
            a = _gram_np.lml_wse(tv, 2.0, lam, sf, sn, y)
            b = _gram_cy.lml_wse(tv, 2.0, lam, sf, sn, y)
            assert a == pytest.approx(b, abs=1e-10)

    def test_indefinite_gram_gives_nan_on_both(self, rng):
        # order-1 transport on a 3-point support is indefinite; both
        # implementations must report failure as NaN, not raise
        w = rng.dirichlet(np.ones(3), 60)
        tv = np.ascontiguousarray(0.5 * np.abs(w[:, None, :] - w[None, :, :]).sum(-1))
        y = rng.normal(0.0, 1.0, 60)
        a = _gram_np.lml_wse(tv, 1.0, 0.5, 1.0, 1e-6, y)
        b = _gram_cy.lml_wse(tv, 1.0, 0.5, 1.0, 1e-6, y)
        assert np.isnan(a) and np.isnan(b)


class TestDispatchValidation:
    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            kernels.se_cross_gram(rng.normal(size=(3, 2)), rng.normal(size=(3, 3)), 1.0, 1.0)

    def test_scalar_lengthscale_broadcasts(self, rng):
        x = rng.normal(size=(4, 3))
        iso = kernels.se_cross_gram(x, x, 0.7, 1.0)
        full = kernels.se_cross_gram(x, x, np.full(3, 0.7), 1.0)
        assert np.array_equal(iso, full)

    def test_read_only_inputs_accepted(self, rng):
        # dataclass consumers hand in arrays with the writeable flag cleared
        x = rng.normal(size=(5, 2))
        x.flags.writeable = False
        out = kernels.se_cross_gram(x, x, np.full(2, 0.5), 1.0)
        assert out.shape == (5, 5)
