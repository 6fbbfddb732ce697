"""Simulated allocation environments and budget processes.

The job environment has m jobs with unknown requirements nu; a job given x
completes with probability min(1, x / nu), and the reward is the number of
completions.  The marketing environment pays sum_i eta_i * x_i with fresh
nonnegative random rates each round, so only the total reward is observable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from bora.errors import ConfigError
from bora.measures import AllocationDecision

BUDGET_MODES = ("constant", "uniform", "gaussian", "gaussian_constant")


@dataclass
class BernoulliJobsEnv:
    """Jobs with hidden requirements; feedback is per-job completion flags."""

    nu: np.ndarray
    rng: np.random.Generator

    def __post_init__(self):
        nu = np.asarray(self.nu, dtype=float)
        if nu.ndim != 1 or nu.size < 2:
            raise ValueError("nu must be a 1-d vector with at least 2 entries")
        if not np.all(np.isfinite(nu)) or np.any(nu <= 0.0):
            raise ValueError("nu entries must be positive and finite")
        self.nu = nu

    @property
    def m(self) -> int:
        return self.nu.size


def bernoulli_step(env: BernoulliJobsEnv, x: AllocationDecision) -> tuple[float, np.ndarray]:
    """One round: returns (number of completed jobs, per-job 0/1 flags).

    Allocating at least nu_i makes completion certain; the ratio is clamped
    at one, so surplus is wasted rather than helpful.
    """
    if x.m != env.m:
        raise ValueError(f"decision has {x.m} channels, environment has {env.m}")
    probs = np.minimum(1.0, x.amounts / env.nu)
    outcomes = (env.rng.random(env.m) < probs).astype(np.int64)
    return float(outcomes.sum()), outcomes


@dataclass
class LinearMarketingEnv:
    """Linear payoff with random nonnegative per-channel rates each round."""

    mu: np.ndarray
    sigma: np.ndarray
    rng: np.random.Generator

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if mu.ndim != 1 or mu.size < 2 or sigma.shape != mu.shape:
            raise ValueError("mu and sigma must be matching 1-d vectors, length >= 2")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise ValueError("mu and sigma must be finite")
        if np.any(sigma < 0.0):
            raise ValueError("sigma entries must be nonnegative")
        self.mu = mu
        self.sigma = sigma

    @property
    def m(self) -> int:
        return self.mu.size


def marketing_step(env: LinearMarketingEnv, x: AllocationDecision) -> float:
    """One round: reward sum_i max(0, N(mu_i, sigma_i)) * x_i."""
    if x.m != env.m:
        raise ValueError(f"decision has {x.m} channels, environment has {env.m}")
    eta = np.maximum(0.0, env.rng.normal(env.mu, env.sigma))
    return float(eta @ x.amounts)


def draw_marketing_params(m: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Rate means uniform on [0, 1], rate spreads uniform on [0, 0.2]."""
    if m < 2:
        raise ValueError("m must be at least 2")
    return rng.uniform(0.0, 1.0, m), rng.uniform(0.0, 0.2, m)


@dataclass
class BudgetProcess:
    """Per-round budget generator.

    Modes: "constant" repeats ``value``; "uniform" draws from [lo, hi];
    "gaussian" draws N(mean, sd) resampled until above ``floor``;
    "gaussian_constant" makes one such draw and repeats it for the whole run.
    """

    mode: str
    rng: np.random.Generator | None = None
    value: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    mean: float = 0.0
    sd: float = 0.0
    floor: float = 1.0
    _held: float | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.mode not in BUDGET_MODES:
            raise ConfigError(f"unknown budget mode {self.mode!r}")
        if self.mode == "constant":
            if not np.isfinite(self.value) or self.value <= 0.0:
                raise ConfigError("constant budget needs a positive value")
        elif self.mode == "uniform":
            if not (np.isfinite(self.lo) and np.isfinite(self.hi)):
                raise ConfigError("uniform budget needs finite lo and hi")
            if self.lo <= 0.0 or self.hi < self.lo:
                raise ConfigError("uniform budget needs 0 < lo <= hi")
            if self.rng is None:
                raise ConfigError("uniform budget needs an rng")
        else:
            if not (np.isfinite(self.mean) and np.isfinite(self.sd)) or self.sd < 0.0:
                raise ConfigError("gaussian budget needs a finite mean and sd >= 0")
            if self.floor <= 0.0:
                raise ConfigError("gaussian budget needs a positive floor")
            if self.rng is None:
                raise ConfigError("gaussian budget needs an rng")


def next_budget(proc: BudgetProcess, t: int) -> float:
    """Budget for round t (1-based)."""
    if t < 1:
        raise ValueError("t must be at least 1")
    if proc.mode == "constant":
        return proc.value
    if proc.mode == "uniform":
        return float(proc.rng.uniform(proc.lo, proc.hi))
    if proc.mode == "gaussian":
        return _positive_normal(proc)
    if proc._held is None:
        proc._held = _positive_normal(proc)
    return proc._held


def _positive_normal(proc: BudgetProcess) -> float:
    while True:
        b = float(proc.rng.normal(proc.mean, proc.sd))
        if b > proc.floor:
            return b


def utopic_cumulative(env, horizon: int) -> np.ndarray:
    """Cumulative reward when every job completes every round: m * t.

    Only the job environment has this finite ceiling.
    """
    if not isinstance(env, BernoulliJobsEnv):
        raise ValueError("the utopic reference only applies to the job environment")
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    return np.arange(1, horizon + 1, dtype=float) * env.m


def rectified_normal_mean(mu, sigma):
    """E[max(0, N(mu, sigma))], elementwise; scalars in give a scalar out."""
    mu_a, sigma_a = np.broadcast_arrays(
        np.asarray(mu, dtype=float), np.asarray(sigma, dtype=float)
    )
    scalar = mu_a.ndim == 0
    mu_a = np.atleast_1d(mu_a)
    sigma_a = np.atleast_1d(sigma_a)
    out = np.maximum(mu_a, 0.0)
    pos = sigma_a > 0.0
    if np.any(pos):
        r = mu_a[pos] / sigma_a[pos]
        out[pos] = mu_a[pos] * norm.cdf(r) + sigma_a[pos] * norm.pdf(r)
    return float(out[0]) if scalar else out


def oracle_best_static(env: LinearMarketingEnv, budgets) -> float:
    """Expected cumulative reward of the best fixed single-channel strategy.

    The payoff is linear in the allocation, so the best static weight vector
    puts everything on the channel with the highest expected rate; ties go to
    the lowest index.
    """
    b = np.asarray(budgets, dtype=float)
    if b.ndim != 1 or b.size < 1:
        raise ValueError("budgets must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(b)) or np.any(b <= 0.0):
        raise ValueError("budgets must be positive and finite")
    means = rectified_normal_mean(env.mu, env.sigma)
    return float(b.sum() * means[int(np.argmax(means))])
