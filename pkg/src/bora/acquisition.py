"""Upper-confidence-bound acquisition over the budget-scaled simplex.

Every candidate allocation spends the budget exactly, so the search space is
the probability simplex whatever the model's input convention: models over
raw amounts are queried at weights times budget, models over weights are
queried at the weights directly.

Maximization is a uniform candidate sweep followed by local pairwise
exchange refinement of the best candidates: move eps mass from one channel
to another, keep strict improvements, halve eps when a full move set fails.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bora.gp import GpModel, posterior, posterior_batch
from bora.measures import (
    AllocationDecision,
    WeightVector,
    _project_rows,
    from_weight_vector,
)

N_CANDIDATES = 2048
TOP_K = 8
EPS_START = 0.1
EPS_MIN = 1e-4

# Bound on refinement batches per candidate; strict-improvement steps make
# runaway loops impossible in exact arithmetic, this guards the inexact kind.
_MAX_ROUNDS = 1000


@dataclass(frozen=True)
class BetaSchedule:
    """Exploration weight schedule for the confidence bound.

    mode "fixed" always returns ``value``; mode "randomized" draws from an
    exponential distribution with mean 2 * ln(t + 1), which keeps occasional
    large exploration boosts while decaying none of the average growth.
    """

    mode: str = "fixed"
    value: float = 2.0

    def __post_init__(self):
        if self.mode not in ("fixed", "randomized"):
            raise ValueError(f"unknown beta mode {self.mode!r}")
        if not np.isfinite(self.value) or self.value < 0.0:
            raise ValueError("beta value must be nonnegative")


def sample_beta(schedule: BetaSchedule, t: int, rng: np.random.Generator) -> float:
    """Exploration weight for step t (1-based)."""
    if t < 1:
        raise ValueError("t must be at least 1")
    if schedule.mode == "fixed":
        return schedule.value
    return float(rng.exponential(2.0 * np.log(t + 1.0)))


def ucb(model: GpModel, query, beta: float) -> float:
    """Upper confidence bound mean + sqrt(beta) * sd at a single query."""
    if not np.isfinite(beta) or beta < 0.0:
        raise ValueError("beta must be nonnegative")
    mean, var = posterior(model, query)
    return float(mean + np.sqrt(beta * var))


def _refine_batch(score_fn, ws, ss, idx_to, idx_from, eps_start, eps_min):
    """Pairwise-exchange local search run in lockstep over several starts.

    Each start follows exactly the path the one-at-a-time search would take:
    probe every ordered pair move at the current eps, jump to the best strict
    improvement, halve eps otherwise.  Batching all still-active starts into
    one score call per round is purely a throughput matter; starts never
    interact.
    """
    n_starts, m = ws.shape
    n_moves = idx_to.size
    rows = np.arange(n_moves)
    ws = ws.copy()
    ss = ss.copy()
    eps = np.full(n_starts, eps_start)
    active = eps >= eps_min
    rounds = 0
    while active.any() and rounds < _MAX_ROUNDS:
        rounds += 1
        idx_active = np.nonzero(active)[0]
        moves = np.repeat(ws[idx_active], n_moves, axis=0)
        # per-start eps applied pairwise: build the offsets block by block
        offs = np.repeat(eps[idx_active], n_moves)
        flat_rows = np.arange(moves.shape[0])
        moves[flat_rows, np.tile(idx_to, idx_active.size)] += offs
        moves[flat_rows, np.tile(idx_from, idx_active.size)] -= offs
        # Moving more mass than a channel holds leaves the sum intact but
        # breaks nonnegativity; project those rows back.
        bad = (moves < 0.0).any(axis=1)
        if bad.any():
            moves[bad] = _project_rows(moves[bad])
        vals = score_fn(moves)
        for j, i in enumerate(idx_active):
            block = vals[j * n_moves : (j + 1) * n_moves]
            k = int(np.argmax(block))
            if block[k] > ss[i]:
                ws[i] = moves[j * n_moves + k]
                ss[i] = float(block[k])
            else:
                eps[i] *= 0.5
                if eps[i] < eps_min:
                    active[i] = False
    return ws, ss


def _maximize_on_simplex(score_fn, m, rng, extra, n_candidates, top_k, eps_start, eps_min):
    cands = rng.standard_exponential((n_candidates, m))
    sums = cands.sum(axis=1, keepdims=True)
    sums[sums <= 0.0] = 1.0
    cands = cands / sums
    cands[cands.sum(axis=1) <= 0.0] = 1.0 / m
    if extra is not None and extra.shape[0]:
        cands = np.vstack([cands, extra])
    scores = score_fn(cands)
    # Stable sort keeps the first-encountered candidate ahead on ties.
    order = np.argsort(-scores, kind="stable")[:top_k]
    idx_to, idx_from = _move_pairs(m)
    ws, ss = _refine_batch(
        score_fn,
        cands[order],
        scores[order].astype(float),
        idx_to,
        idx_from,
        eps_start,
        eps_min,
    )
    # Order-stable winner: strict improvement over earlier starts only.
    best = 0
    for i in range(1, ws.shape[0]):
        if ss[i] > ss[best]:
            best = i
    return ws[best], float(ss[best])


def _move_pairs(m: int) -> tuple[np.ndarray, np.ndarray]:
    off_diag = ~np.eye(m, dtype=bool)
    idx_to, idx_from = np.nonzero(off_diag)
    return idx_to, idx_from


def _normalized_rows(points: np.ndarray) -> np.ndarray:
    if points.size == 0:
        return np.empty((0, points.shape[1]))
    sums = points.sum(axis=1)
    ok = sums > 0.0
    return points[ok] / sums[ok, None]


def maximize_ucb_budget(
    model: GpModel,
    budget: float,
    beta: float,
    rng: np.random.Generator,
    *,
    n_candidates: int = N_CANDIDATES,
    top_k: int = TOP_K,
    eps_start: float = EPS_START,
    eps_min: float = EPS_MIN,
) -> AllocationDecision:
    """Best allocation of ``budget`` under a model over raw amounts.

    Candidate weights are scored at weight * budget.  Past inputs, rescaled
    to the current budget, join the sweep so known good allocations are
    always reachable.
    """
    if not np.isfinite(budget) or budget <= 0.0:
        raise ValueError("budget must be positive and finite")
    if not np.isfinite(beta) or beta < 0.0:
        raise ValueError("beta must be nonnegative")

    def score_fn(wmat):
        means, variances = posterior_batch(model, wmat * budget)
        return means + np.sqrt(beta * variances)

    extra = _normalized_rows(model.inputs)
    w, _ = _maximize_on_simplex(
        score_fn, model.input_dim, rng, extra, n_candidates, top_k, eps_start, eps_min
    )
    return from_weight_vector(WeightVector(w), budget)


def maximize_ucb_simplex(
    model: GpModel,
    beta: float,
    rng: np.random.Generator,
    *,
    n_candidates: int = N_CANDIDATES,
    top_k: int = TOP_K,
    eps_start: float = EPS_START,
    eps_min: float = EPS_MIN,
) -> WeightVector:
    """Best weight vector under a model over simplex points."""
    if not np.isfinite(beta) or beta < 0.0:
        raise ValueError("beta must be nonnegative")

    def score_fn(wmat):
        means, variances = posterior_batch(model, wmat)
        return means + np.sqrt(beta * variances)

    extra = _normalized_rows(model.inputs)
    w, _ = _maximize_on_simplex(
        score_fn, model.input_dim, rng, extra, n_candidates, top_k, eps_start, eps_min
    )
    return WeightVector(w)
