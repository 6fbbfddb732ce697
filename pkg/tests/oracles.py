"""Independent reference implementations used by the test suite.

Everything here is deliberately naive: linear programs instead of closed
forms, dense inverses instead of Cholesky solves, quadrature instead of
analytic expectations, double loops instead of vectorized kernels.  None of
it imports from the package internals beyond plain data, so agreement with
the fast paths is evidence rather than tautology.
"""

from __future__ import annotations

import numpy as np
from scipy import integrate, optimize, stats


def lp_wasserstein(a: np.ndarray, a2: np.ndarray, p: float) -> float:
    """Order-p Wasserstein distance by solving the transport LP exactly.

    Binary ground cost: moving mass between distinct support points costs 1,
    staying costs 0.  Decision variables are the m*m entries of the transport
    plan with row sums a and column sums a2.
    """
    a = np.asarray(a, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    m = a.size
    cost = (1.0 - np.eye(m)).ravel()
    # row-sum and column-sum equality constraints
    a_eq = np.zeros((2 * m, m * m))
    for i in range(m):
        a_eq[i, i * m : (i + 1) * m] = 1.0
        a_eq[m + i, i::m] = 1.0
    b_eq = np.concatenate([a, a2])
    res = optimize.linprog(cost, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    assert res.status == 0, f"transport LP failed: {res.message}"
    return float(max(res.fun, 0.0)) ** (1.0 / p)


def se_kernel_value(x, x2, signal_variance, lengthscales) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    ell = np.broadcast_to(np.asarray(lengthscales, dtype=float), x.shape)
    quad = 0.0
    for i in range(x.size):
        quad += ((x[i] - x2[i]) / ell[i]) ** 2
    return float(signal_variance * np.exp(-0.5 * quad))


def wse_kernel_value(a, a2, signal_variance, scale, p) -> float:
    w = lp_wasserstein(a, a2, p)
    return float(signal_variance * np.exp(-0.5 * w * w / (scale * scale)))


def _gram(points, kernel) -> np.ndarray:
    n = len(points)
    k = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            k[i, j] = kernel(points[i], points[j])
    return k


def dense_posterior(points, targets, kernel, noise_variance, query, mean_offset=0.0):
    """Predictive mean and variance by explicit matrix inversion."""
    if len(points) == 0:
        return mean_offset, kernel(query, query)
    k = _gram(points, kernel)
    kinv = np.linalg.inv(k + noise_variance * np.eye(len(points)))
    kvec = np.array([kernel(query, q) for q in points])
    resid = np.asarray(targets, dtype=float) - mean_offset
    mean = mean_offset + kvec @ kinv @ resid
    var = kernel(query, query) - kvec @ kinv @ kvec
    return float(mean), float(var)


def dense_lml(points, targets, kernel, noise_variance, mean_offset=0.0, jitter=0.0):
    """Gaussian log marginal likelihood via slogdet and a dense inverse."""
    n = len(points)
    cov = _gram(points, kernel) + (noise_variance + jitter) * np.eye(n)
    resid = np.asarray(targets, dtype=float) - mean_offset
    sign, logdet = np.linalg.slogdet(cov)
    assert sign > 0, "covariance not positive definite"
    quad = resid @ np.linalg.inv(cov) @ resid
    return float(-0.5 * quad - 0.5 * logdet - 0.5 * n * np.log(2.0 * np.pi))


def grid_max_ucb(score, beta: float, n_grid: int = 4001) -> float:
    """Best UCB value over a dense sweep of the two-arm simplex.

    score maps a weight vector (w, 1-w) to (mean, variance); returns the
    highest mean + sqrt(beta) * sd over the grid.
    """
    best = -np.inf
    for w in np.linspace(0.0, 1.0, n_grid):
        mu, var = score(np.array([w, 1.0 - w]))
        val = mu + np.sqrt(beta) * np.sqrt(max(var, 0.0))
        best = max(best, val)
    return float(best)


def rectified_normal_mean_quadrature(mu: float, sigma: float) -> float:
    """E[max(0, X)] for X ~ N(mu, sigma) by numerical integration."""
    if sigma == 0.0:
        return max(mu, 0.0)
    # integrate in standardized coordinates so the integrand scale never
    # degenerates for small sigma: E = int (mu + sigma z) phi(z) dz over the
    # region where mu + sigma z > 0
    z0 = max(-mu / sigma, -12.0)
    if z0 >= 12.0:
        return 0.0
    val, _ = integrate.quad(lambda z: (mu + sigma * z) * stats.norm.pdf(z), z0, 12.0)
    return float(val)


def wilson_lower_reference(successes: int, trials: int, confidence: float) -> float:
    """One-sided Wilson lower bound by inverting the score test numerically.

    The bound is the smaller root q of (phat - q) * sqrt(n) = z * sqrt(q(1-q)),
    found by bracketed root search rather than the usual quadratic formula.
    """
    if trials == 0:
        return 0.0
    z = float(stats.norm.ppf(confidence))
    phat = successes / trials
    if phat == 0.0 or z <= 0.0:
        return 0.0

    def score_gap(q):
        return (phat - q) * np.sqrt(trials) - z * np.sqrt(q * (1.0 - q))

    # score_gap is positive at 0 and negative just below phat (or below 1
    # when phat = 1, where q = 1 is a spurious boundary root)
    return float(optimize.brentq(score_gap, 0.0, min(phat, 1.0 - 1e-12), xtol=1e-12))
