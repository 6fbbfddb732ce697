"""Numpy fallback for the Gram and marginal-likelihood kernels.

Same call signatures as the compiled module; used when the extension is
unavailable or explicitly disabled.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_solve, cholesky

_LOG_2PI = float(np.log(2.0 * np.pi))

# Cap on temporary elements when forming pairwise absolute differences.
_CHUNK_ELEMS = 2_000_000


def se_cross_gram(
    x: np.ndarray,
    z: np.ndarray,
    lengthscales: np.ndarray,
    signal_variance: float,
) -> np.ndarray:
    """Squared-exponential cross Gram matrix, shape (len(x), len(z))."""
    xs = x / lengthscales
    zs = z / lengthscales
    d2 = (
        (xs * xs).sum(axis=1)[:, None]
        + (zs * zs).sum(axis=1)[None, :]
        - 2.0 * (xs @ zs.T)
    )
    np.maximum(d2, 0.0, out=d2)
    return signal_variance * np.exp(-0.5 * d2)


def wse_cross_gram(
    a: np.ndarray,
    b: np.ndarray,
    p: float,
    scale: float,
    signal_variance: float,
) -> np.ndarray:
    """Wasserstein squared-exponential cross Gram matrix over weight rows."""
    n, m = a.shape
    q = b.shape[0]
    w2 = np.empty((n, q))
    step = max(1, _CHUNK_ELEMS // max(1, q * m))
    e = 2.0 / p
    for i0 in range(0, n, step):
        tv = 0.5 * np.abs(a[i0 : i0 + step, None, :] - b[None, :, :]).sum(axis=-1)
        w2[i0 : i0 + step] = tv if e == 1.0 else tv**e
    return signal_variance * np.exp(-0.5 * w2 / (scale * scale))


def lml_se(
    d2stack: np.ndarray,
    inv_ell2: np.ndarray,
    signal_variance: float,
    noise_variance: float,
    y: np.ndarray,
) -> float:
    """Gaussian log marginal likelihood from precomputed squared differences.

    d2stack has shape (n, n, d) with per-dimension squared input differences.
    Returns NaN when the shifted Gram matrix is not positive definite.
    """
    quad = d2stack @ inv_ell2
    k = signal_variance * np.exp(-0.5 * quad)
    k[np.diag_indices_from(k)] += noise_variance
    return _lml_from_cov(k, y)


def lml_wse(
    tv: np.ndarray,
    p: float,
    scale: float,
    signal_variance: float,
    noise_variance: float,
    y: np.ndarray,
) -> float:
    """Gaussian log marginal likelihood from a precomputed total-variation matrix."""
    e = 2.0 / p
    w2 = tv if e == 1.0 else tv**e
    k = signal_variance * np.exp(-0.5 * w2 / (scale * scale))
    k[np.diag_indices_from(k)] += noise_variance
    return _lml_from_cov(k, y)


def _lml_from_cov(k: np.ndarray, y: np.ndarray) -> float:
    n = y.size
    try:
        low = cholesky(k, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        return float("nan")
    alpha = cho_solve((low, True), y, check_finite=False)
    return float(
        -0.5 * (y @ alpha) - np.log(np.diag(low)).sum() - 0.5 * n * _LOG_2PI
    )
