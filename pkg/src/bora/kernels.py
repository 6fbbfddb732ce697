"""Backend dispatch for the Gram and marginal-likelihood kernels.

The compiled extension is preferred when it imported cleanly; setting the
environment variable BORA_FORCE_NUMPY to a non-empty value pins the numpy
fallback.  ``BACKEND`` records which one is active.
"""

from __future__ import annotations

import os

import numpy as np

from bora import _gram_np

if os.environ.get("BORA_FORCE_NUMPY"):
    _impl = _gram_np
    BACKEND = "numpy"
else:
    try:
        from bora import _gram_cy as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _gram_np
        BACKEND = "numpy"


def _as_matrix(x: np.ndarray, name: str) -> np.ndarray:
    out = np.ascontiguousarray(x, dtype=float)
    if out.ndim == 1:
        out = out[None, :]
    if out.ndim != 2:
        raise ValueError(f"{name} must be a vector or matrix of points")
    return out


def se_cross_gram(x, z, lengthscales, signal_variance: float) -> np.ndarray:
    """Cross Gram matrix of the squared-exponential kernel.

    ``lengthscales`` broadcasts to the input dimension, so a scalar gives the
    isotropic kernel.
    """
    xm = _as_matrix(x, "x")
    zm = _as_matrix(z, "z")
    if xm.shape[1] != zm.shape[1]:
        raise ValueError(f"dimension mismatch: {xm.shape[1]} vs {zm.shape[1]}")
    ell = np.ascontiguousarray(
        np.broadcast_to(np.asarray(lengthscales, dtype=float), (xm.shape[1],))
    )
    return _impl.se_cross_gram(xm, zm, ell, float(signal_variance))


def wse_cross_gram(a, b, p: float, scale: float, signal_variance: float) -> np.ndarray:
    """Cross Gram matrix of the Wasserstein squared-exponential kernel.

    Rows of ``a`` and ``b`` are weight vectors on a shared support.
    """
    am = _as_matrix(a, "a")
    bm = _as_matrix(b, "b")
    if am.shape[1] != bm.shape[1]:
        raise ValueError(f"support mismatch: {am.shape[1]} vs {bm.shape[1]}")
    return _impl.wse_cross_gram(am, bm, float(p), float(scale), float(signal_variance))


def lml_se(d2stack, inv_ell2, signal_variance, noise_variance, y) -> float:
    """Log marginal likelihood from an (n, n, d) squared-difference stack."""
    return _impl.lml_se(
        np.ascontiguousarray(d2stack, dtype=float),
        np.ascontiguousarray(inv_ell2, dtype=float),
        float(signal_variance),
        float(noise_variance),
        np.ascontiguousarray(y, dtype=float),
    )


def lml_wse(tv, p, scale, signal_variance, noise_variance, y) -> float:
    """Log marginal likelihood from an (n, n) total-variation matrix."""
    return _impl.lml_wse(
        np.ascontiguousarray(tv, dtype=float),
        float(p),
        float(scale),
        float(signal_variance),
        float(noise_variance),
        np.ascontiguousarray(y, dtype=float),
    )
