"""Allocations, simplex weights, and Wasserstein distances between them.

An allocation of a budget b over m channels is a nonnegative vector x with
sum(x) = b.  Dividing by b gives a weight vector on the probability simplex,
which we treat as a discrete measure on the support {1, ..., m}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class WeightVector:
    """A point on the probability simplex: nonnegative entries summing to one.

    The constructor accepts entries whose sum is within ``SUM_TOL`` of one and
    renormalizes, so scaling by a budget afterwards keeps the sum exact to
    machine precision.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 2:
            raise ValueError("weights must be a 1-d vector with at least 2 entries")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        total = w.sum()
        if abs(total - 1.0) > SUM_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1 within {SUM_TOL}")
        w = w / total
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return self.weights.size


@dataclass(frozen=True, eq=False)
class AllocationDecision:
    """Amounts assigned to each channel, spending the budget exactly."""

    amounts: np.ndarray
    budget: float

    def __post_init__(self):
        x = np.asarray(self.amounts, dtype=float)
        b = float(self.budget)
        if x.ndim != 1 or x.size < 2:
            raise ValueError("amounts must be a 1-d vector with at least 2 entries")
        if not np.all(np.isfinite(x)):
            raise ValueError("amounts must be finite")
        if np.any(x < 0.0):
            raise ValueError("amounts must be nonnegative")
        if not np.isfinite(b) or b <= 0.0:
            raise ValueError("budget must be positive and finite")
        if abs(x.sum() - b) > SUM_TOL:
            raise ValueError(f"amounts sum to {x.sum()!r}, expected budget {b!r}")
        x = x.copy()
        x.flags.writeable = False
        object.__setattr__(self, "amounts", x)
        object.__setattr__(self, "budget", b)

    @property
    def m(self) -> int:
        return self.amounts.size


def to_weight_vector(x: AllocationDecision) -> WeightVector:
    """Normalize an allocation by its budget."""
    return WeightVector(x.amounts / x.budget)


def from_weight_vector(w: WeightVector, budget: float) -> AllocationDecision:
    """Scale simplex weights up to an allocation of ``budget``."""
    b = float(budget)
    if not np.isfinite(b) or b <= 0.0:
        raise ValueError("budget must be positive and finite")
    return AllocationDecision(w.weights * b, b)


def wasserstein_p(a: WeightVector, a2: WeightVector, p: float = 1.0) -> float:
    """Order-p Wasserstein distance between two weight vectors.

    Both measures live on the common support {1, ..., m} with the binary
    ground metric (distinct points are at distance one).  Optimal transport
    then only pays for the mass that must move at all, which is the total
    variation distance, and

        W_p(a, a') = (0.5 * sum_i |a_i - a'_i|) ** (1/p).

    Args:
        a: First weight vector.
        a2: Second weight vector, same support size.
        p: Order of the distance, any positive real.

    Returns:
        The distance as a float in [0, 1].
    """
    if a.m != a2.m:
        raise ValueError(f"supports differ: {a.m} vs {a2.m}")
    if not np.isfinite(p) or p <= 0.0:
        raise ValueError("p must be positive and finite")
    tv = 0.5 * np.abs(a.weights - a2.weights).sum()
    return float(tv ** (1.0 / p))


def sample_uniform_simplex(m: int, rng: np.random.Generator) -> WeightVector:
    """Draw a weight vector uniformly from the (m-1)-simplex.

    Normalized standard-exponential draws are flat-Dirichlet distributed.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    g = rng.standard_exponential(m)
    # Zero total has probability zero but would divide by zero; redraw.
    while g.sum() <= 0.0:
        g = rng.standard_exponential(m)
    return WeightVector(g / g.sum())


def project_to_simplex(v: np.ndarray) -> WeightVector:
    """Euclidean projection of a real vector onto the probability simplex.

    Sort-and-threshold: find the largest rho with
    u_rho + (1 - sum_{j<=rho} u_j) / rho > 0 for the descending sort u, then
    clip v shifted by that threshold.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("input must be a 1-d vector with at least 2 entries")
    return WeightVector(_project_rows(v[None, :])[0])


def _project_rows(vs: np.ndarray) -> np.ndarray:
    """Row-wise simplex projection of a 2-d array; rows then sum to one."""
    n, m = vs.shape
    u = -np.sort(-vs, axis=1)
    css = np.cumsum(u, axis=1)
    j = np.arange(1, m + 1)
    cond = u + (1.0 - css) / j > 0.0
    # Last index where the condition holds; it always holds at index 0.
    rho = m - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = (1.0 - css[np.arange(n), rho]) / (rho + 1)
    w = np.maximum(vs + tau[:, None], 0.0)
    return w / w.sum(axis=1, keepdims=True)
