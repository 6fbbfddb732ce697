"""Allocation policies: three BO variants, a semi-bandit baseline, random.

The BO variants share one loop: warm up with uniform random allocations,
then fit a GP surrogate to the history and maximize a UCB acquisition.
They differ in what the surrogate sees:

  1. raw amounts under an SE kernel,
  2. budget-normalized weights under an SE kernel,
  3. budget-normalized weights under a Wasserstein-SE kernel.

The semi-bandit baseline needs per-channel completion feedback.  It keeps an
interval [lower, upper] around each channel's unknown requirement, fills
channels greedily up to their lower bounds, and spreads any residual budget
evenly.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from bora.acquisition import (
    BetaSchedule,
    maximize_ucb_budget,
    maximize_ucb_simplex,
    sample_beta,
)
from bora.errors import FitError
from bora.gp import DEFAULT_WASSERSTEIN_P, GpModel, fit_gp
from bora.measures import (
    AllocationDecision,
    from_weight_vector,
    sample_uniform_simplex,
    to_weight_vector,
)

logger = logging.getLogger(__name__)

N_INIT = 3
WILSON_CONFIDENCE = 0.95

CANONICAL_POLICIES = ("bora1", "bora2", "bora3", "sbf", "random")


@dataclass
class ObservationRecord:
    """One round of feedback: the decision, its reward, and, when the
    environment reports them, per-channel completion flags."""

    decision: AllocationDecision
    reward: float
    outcomes: np.ndarray | None = None
    t: int = 0


def _history_inputs(history: list[ObservationRecord], variant: int) -> np.ndarray:
    if variant == 1:
        return np.array([rec.decision.amounts for rec in history])
    return np.array([to_weight_vector(rec.decision).weights for rec in history])


def fit_history_model(
    history: list[ObservationRecord],
    variant: int,
    rng: np.random.Generator,
    *,
    wasserstein_p: float = DEFAULT_WASSERSTEIN_P,
) -> GpModel:
    """Fit the surrogate a BO variant would use on this history."""
    if variant not in (1, 2, 3):
        raise ValueError(f"unknown variant {variant}")
    if len(history) < 2:
        raise ValueError("need at least two observations to fit a surrogate")
    inputs = _history_inputs(history, variant)
    targets = np.array([rec.reward for rec in history])
    kind = "wse" if variant == 3 else "se"
    return fit_gp(inputs, targets, kind, rng, wasserstein_p=wasserstein_p)


def _bora_decide(
    variant: int,
    history: list[ObservationRecord],
    budget: float,
    schedule: BetaSchedule,
    rng: np.random.Generator,
    m: int | None,
    n_init: int,
    wasserstein_p: float,
) -> AllocationDecision:
    n = len(history)
    if m is None:
        if n == 0:
            raise ValueError("m is required when the history is empty")
        m = history[0].decision.m
    if n < n_init:
        return from_weight_vector(sample_uniform_simplex(m, rng), budget)
    t = n + 1
    beta = sample_beta(schedule, t, rng)
    try:
        model = fit_history_model(history, variant, rng, wasserstein_p=wasserstein_p)
    except FitError:
        logger.warning(
            "surrogate fit failed at step %d; falling back to a random allocation", t
        )
        return from_weight_vector(sample_uniform_simplex(m, rng), budget)
    if variant == 1:
        return maximize_ucb_budget(model, budget, beta, rng)
    return from_weight_vector(maximize_ucb_simplex(model, beta, rng), budget)


def bora1_decide(
    history,
    budget,
    schedule: BetaSchedule,
    rng: np.random.Generator,
    *,
    m: int | None = None,
    n_init: int = N_INIT,
) -> AllocationDecision:
    """UCB decision with the surrogate over raw allocation amounts."""
    return _bora_decide(1, history, budget, schedule, rng, m, n_init, DEFAULT_WASSERSTEIN_P)


def bora2_decide(
    history,
    budget,
    schedule: BetaSchedule,
    rng: np.random.Generator,
    *,
    m: int | None = None,
    n_init: int = N_INIT,
) -> AllocationDecision:
    """UCB decision with the surrogate over budget-normalized weights."""
    return _bora_decide(2, history, budget, schedule, rng, m, n_init, DEFAULT_WASSERSTEIN_P)


def bora3_decide(
    history,
    budget,
    schedule: BetaSchedule,
    rng: np.random.Generator,
    *,
    m: int | None = None,
    n_init: int = N_INIT,
    wasserstein_p: float = DEFAULT_WASSERSTEIN_P,
) -> AllocationDecision:
    """UCB decision with the Wasserstein-kernel surrogate over weights."""
    return _bora_decide(3, history, budget, schedule, rng, m, n_init, wasserstein_p)


def wilson_lower(successes: int, trials: int, confidence: float = WILSON_CONFIDENCE) -> float:
    """One-sided Wilson lower confidence limit for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    z = float(norm.ppf(confidence))
    n = float(trials)
    phat = successes / n
    z2 = z * z
    center = phat + z2 / (2.0 * n)
    margin = z * np.sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n))
    return max(0.0, float((center - margin) / (1.0 + z2 / n)))


@dataclass
class SbfState:
    """Interval estimates of the per-channel requirements plus trial logs.

    ``lower`` is the largest allocation seen to fail; ``upper`` shrinks on
    successes via a confidence bound on the observed success rate.  The
    invariants lower nondecreasing, upper nonincreasing, and lower <= upper
    hold after every update.
    """

    lower: np.ndarray
    upper: np.ndarray
    amounts: list[list[float]] = field(repr=False)
    outcomes: list[list[int]] = field(repr=False)

    @property
    def m(self) -> int:
        return self.lower.size


def sbf_init(m: int) -> SbfState:
    if m < 2:
        raise ValueError("m must be at least 2")
    return SbfState(
        lower=np.zeros(m),
        upper=np.full(m, np.inf),
        amounts=[[] for _ in range(m)],
        outcomes=[[] for _ in range(m)],
    )


def sbf_decide(state: SbfState, budget: float) -> AllocationDecision:
    """Greedy optimistic fill: channels in ascending order of their lower
    bounds get that bound (or what is left), and any remaining budget is
    spread evenly over all channels."""
    if not np.isfinite(budget) or budget <= 0.0:
        raise ValueError("budget must be positive and finite")
    m = state.m
    amounts = np.zeros(m)
    remaining = budget
    for i in np.argsort(state.lower, kind="stable"):
        give = min(float(state.lower[i]), remaining)
        amounts[i] = give
        remaining -= give
        if remaining <= 0.0:
            remaining = 0.0
            break
    # A positive residual means every channel reached its target.
    if remaining > 0.0:
        amounts += remaining / m
    return AllocationDecision(amounts, budget)


def sbf_update(
    state: SbfState, decision: AllocationDecision, outcomes: np.ndarray
) -> SbfState:
    """Fold one round of per-channel completion flags into the intervals.

    A failure at x raises the lower bound to x.  A success at x caps the
    requirement at x / q, where q is the Wilson lower limit of the channel's
    success rate over trials at allocations within the current upper bound.
    Both moves are clamped so the interval ordering survives noise.
    """
    out = np.asarray(outcomes)
    if out.shape != (state.m,):
        raise ValueError(f"expected {state.m} outcomes, got shape {out.shape}")
    if decision.m != state.m:
        raise ValueError("decision dimension does not match the state")
    for i in range(state.m):
        x = float(decision.amounts[i])
        success = int(out[i])
        state.amounts[i].append(x)
        state.outcomes[i].append(success)
        lo, hi = float(state.lower[i]), float(state.upper[i])
        if not success:
            lo = max(lo, min(x, hi))
        else:
            pool = [
                s
                for a, s in zip(state.amounts[i], state.outcomes[i])
                if a <= hi
            ]
            if pool:
                q = wilson_lower(sum(pool), len(pool))
                if q > 0.0:
                    hi = min(hi, max(x / q, lo))
        state.lower[i] = lo
        state.upper[i] = hi
    return state


class BoraPolicy:
    """Stateful wrapper around one of the BO decision rules."""

    def __init__(
        self,
        variant: int,
        m: int,
        schedule: BetaSchedule,
        rng: np.random.Generator,
        *,
        wasserstein_p: float = DEFAULT_WASSERSTEIN_P,
        n_init: int = N_INIT,
    ):
        if variant not in (1, 2, 3):
            raise ValueError(f"unknown variant {variant}")
        self.variant = variant
        self.m = m
        self.schedule = schedule
        self.rng = rng
        self.wasserstein_p = wasserstein_p
        self.n_init = n_init
        self.history: list[ObservationRecord] = []

    @property
    def name(self) -> str:
        return f"bora{self.variant}"

    def decide(self, budget: float) -> AllocationDecision:
        return _bora_decide(
            self.variant,
            self.history,
            budget,
            self.schedule,
            self.rng,
            self.m,
            self.n_init,
            self.wasserstein_p,
        )

    def observe(self, record: ObservationRecord) -> None:
        self.history.append(record)


class SbfPolicy:
    """Stateful wrapper around the semi-bandit baseline."""

    name = "sbf"

    def __init__(self, m: int):
        self.state = sbf_init(m)

    def decide(self, budget: float) -> AllocationDecision:
        return sbf_decide(self.state, budget)

    def observe(self, record: ObservationRecord) -> None:
        if record.outcomes is None:
            raise ValueError("the semi-bandit baseline needs per-channel outcomes")
        sbf_update(self.state, record.decision, record.outcomes)


class RandomPolicy:
    """Uniform random weights each round; the no-learning reference."""

    name = "random"

    def __init__(self, m: int, rng: np.random.Generator):
        self.m = m
        self.rng = rng

    def decide(self, budget: float) -> AllocationDecision:
        return from_weight_vector(sample_uniform_simplex(self.m, self.rng), budget)

    def observe(self, record: ObservationRecord) -> None:
        pass
