"""Gaussian process regression with squared-exponential kernels.

Two kernel families are supported.  The plain squared-exponential ("se")
compares points coordinate-wise with one lengthscale per dimension:

    k(x, x') = sigma_f * exp(-0.5 * sum_i (x_i - x'_i)^2 / ell_i^2)

The Wasserstein squared-exponential ("wse") compares weight vectors through
their transport distance with a single scale:

    k(a, a') = sigma_f * exp(-0.5 * W_p(a, a')^2 / scale^2)

In both cases sigma_f is the kernel value at zero distance.  Posterior
moments condition on targets observed under additive Gaussian noise with
variance sigma_eps^2:

    mean(x) = k(x, X) [K + sigma_eps^2 I]^{-1} y
    var(x)  = k(x, x) - k(x, X) [K + sigma_eps^2 I]^{-1} k(X, x)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from bora import kernels
from bora.errors import FitError
from bora.measures import WeightVector

_JITTER_INIT = 1e-10
_JITTER_MAX = 1e-4
_LOG_2PI = float(np.log(2.0 * np.pi))

DEFAULT_NOISE_FLOOR = 1e-6
DEFAULT_WASSERSTEIN_P = 2.0


@dataclass(frozen=True, eq=False)
class KernelSpec:
    """Kernel family plus hyperparameters.

    kind "se" expects one lengthscale per input dimension (a single entry
    broadcasts); kind "wse" expects exactly one scale and uses
    ``wasserstein_p`` as the transport order.
    """

    kind: str
    signal_variance: float
    lengthscales: np.ndarray
    noise_variance: float
    wasserstein_p: float = DEFAULT_WASSERSTEIN_P

    def __post_init__(self):
        if self.kind not in ("se", "wse"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        ell = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if not np.all(np.isfinite(ell)) or np.any(ell <= 0.0):
            raise ValueError("lengthscales must be positive and finite")
        if self.kind == "wse" and ell.size != 1:
            raise ValueError("wse kernel takes a single scale")
        if not np.isfinite(self.signal_variance) or self.signal_variance <= 0.0:
            raise ValueError("signal_variance must be positive")
        if not np.isfinite(self.noise_variance) or self.noise_variance < 0.0:
            raise ValueError("noise_variance must be nonnegative")
        if not np.isfinite(self.wasserstein_p) or self.wasserstein_p <= 0.0:
            raise ValueError("wasserstein_p must be positive")
        ell = ell.copy()
        ell.flags.writeable = False
        object.__setattr__(self, "lengthscales", ell)
        object.__setattr__(self, "signal_variance", float(self.signal_variance))
        object.__setattr__(self, "noise_variance", float(self.noise_variance))
        object.__setattr__(self, "wasserstein_p", float(self.wasserstein_p))


def gram(spec: KernelSpec, x: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Cross Gram matrix between the rows of x and z under ``spec``."""
    if spec.kind == "se":
        return kernels.se_cross_gram(x, z, spec.lengthscales, spec.signal_variance)
    return kernels.wse_cross_gram(
        x, z, spec.wasserstein_p, float(spec.lengthscales[0]), spec.signal_variance
    )


def _as_point(x, name: str) -> np.ndarray:
    if isinstance(x, WeightVector):
        return x.weights
    out = np.asarray(x, dtype=float)
    if out.ndim != 1:
        raise ValueError(f"{name} must be a single point")
    return out


def se_kernel(x, x2, spec: KernelSpec) -> float:
    """Squared-exponential kernel value between two points."""
    if spec.kind != "se":
        raise ValueError("spec is not an se kernel")
    xa, xb = _as_point(x, "x"), _as_point(x2, "x2")
    if xa.size != xb.size:
        raise ValueError(f"dimension mismatch: {xa.size} vs {xb.size}")
    return float(gram(spec, xa[None, :], xb[None, :])[0, 0])


def wse_kernel(a, a2, spec: KernelSpec) -> float:
    """Wasserstein squared-exponential kernel value between two weight vectors."""
    if spec.kind != "wse":
        raise ValueError("spec is not a wse kernel")
    wa, wb = _as_point(a, "a"), _as_point(a2, "a2")
    if wa.size != wb.size:
        raise ValueError(f"support mismatch: {wa.size} vs {wb.size}")
    return float(gram(spec, wa[None, :], wb[None, :])[0, 0])


@dataclass(eq=False)
class GpModel:
    """A kernel spec conditioned on observations, ready for posterior queries.

    ``mean_offset`` is a constant subtracted from the targets before
    conditioning and added back to posterior means; fitted models store the
    training mean there.  Construction factorizes the shifted Gram matrix
    once, escalating a diagonal jitter from 1e-10 by factors of ten up to
    1e-4 if the factorization fails, and raises FitError past that.
    """

    spec: KernelSpec
    inputs: np.ndarray
    targets: np.ndarray
    mean_offset: float = 0.0
    jitter: float = field(init=False, default=0.0)
    chol_lower: np.ndarray = field(init=False, repr=False)
    alpha: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        y = np.asarray(self.targets, dtype=float).reshape(-1)
        if x.shape[0] != y.size:
            raise ValueError(f"{x.shape[0]} inputs but {y.size} targets")
        if x.size and not np.all(np.isfinite(x)):
            raise ValueError("inputs must be finite")
        if y.size and not np.all(np.isfinite(y)):
            raise ValueError("targets must be finite")
        if self.spec.kind == "se" and self.spec.lengthscales.size not in (1, x.shape[1]):
            raise ValueError("lengthscales do not match the input dimension")
        self.inputs = x
        self.targets = y
        self.mean_offset = float(self.mean_offset)
        if y.size == 0:
            self.chol_lower = np.empty((0, 0))
            self.alpha = np.empty(0)
            return
        k = gram(self.spec, x, x)
        k[np.diag_indices_from(k)] += self.spec.noise_variance
        self.chol_lower, self.jitter = _chol_with_jitter(k)
        self.alpha = cho_solve(
            (self.chol_lower, True), y - self.mean_offset, check_finite=False
        )

    @property
    def n_obs(self) -> int:
        return self.targets.size

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]


def _chol_with_jitter(k: np.ndarray) -> tuple[np.ndarray, float]:
    try:
        return cholesky(k, lower=True, check_finite=False), 0.0
    except np.linalg.LinAlgError:
        pass
    jitter = _JITTER_INIT
    eye = np.eye(k.shape[0])
    while jitter <= _JITTER_MAX:
        try:
            return cholesky(k + jitter * eye, lower=True, check_finite=False), jitter
        except np.linalg.LinAlgError:
            jitter *= 10.0
    raise FitError(f"Gram matrix is not positive definite at jitter {_JITTER_MAX}")


def posterior_batch(model: GpModel, queries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Posterior means and variances at each query row.

    With no observations this is the prior: mean_offset and sigma_f.
    Variances are latent (noise-free) and clipped at zero.
    """
    q = np.atleast_2d(np.asarray(queries, dtype=float))
    if q.shape[1] != model.input_dim and model.n_obs:
        raise ValueError(
            f"query dimension {q.shape[1]} does not match inputs {model.input_dim}"
        )
    sigma_f = model.spec.signal_variance
    if model.n_obs == 0:
        return (
            np.full(q.shape[0], model.mean_offset),
            np.full(q.shape[0], sigma_f),
        )
    kq = gram(model.spec, q, model.inputs)
    means = model.mean_offset + kq @ model.alpha
    v = solve_triangular(model.chol_lower, kq.T, lower=True, check_finite=False)
    variances = np.maximum(sigma_f - (v * v).sum(axis=0), 0.0)
    return means, variances


def posterior(model: GpModel, query) -> tuple[float, float]:
    """Posterior mean and variance at a single point or WeightVector."""
    point = _as_point(query, "query")
    means, variances = posterior_batch(model, point[None, :])
    return float(means[0]), float(variances[0])


def log_marginal_likelihood(model: GpModel) -> float:
    """Log marginal likelihood of the model's targets under its spec.

    Uses the factorization held by the model, so any jitter that was needed
    is part of the likelihood.
    """
    if model.n_obs == 0:
        raise ValueError("model has no observations")
    z = model.targets - model.mean_offset
    logdet = np.log(np.diag(model.chol_lower)).sum()
    return float(-0.5 * (z @ model.alpha) - logdet - 0.5 * model.n_obs * _LOG_2PI)


def _param_scales(x: np.ndarray, kind: str, tv: np.ndarray | None, p: float) -> np.ndarray:
    """Characteristic input scale per lengthscale parameter."""
    if kind == "se":
        spans = x.max(axis=0) - x.min(axis=0)
        return np.where(spans > 1e-12, spans, 1.0)
    wmax = float(tv.max()) ** (1.0 / p) if tv.size else 0.0
    return np.array([wmax if wmax > 1e-12 else 1.0])


def _default_log_params(scales: np.ndarray) -> np.ndarray:
    """Initial search point: sigma_f = 1, 20%-of-scale lengths, noise 1e-4."""
    return np.concatenate(([0.0], np.log(0.2 * scales), [np.log(1e-4)]))


def _search_bounds(scales: np.ndarray, noise_floor: float) -> tuple[np.ndarray, np.ndarray]:
    """Box for the log-parameter search, at standardized target scale.

    Marginal likelihood is multimodal at low signal-to-noise: a speckle mode
    with near-zero lengthscales and near-zero signal variance can score above
    the structured mode while carrying no usable information.  The floors of
    15% of the input scale and 3% of the target variance exclude that corner;
    both sit well below any lengthscale or amplitude a surrogate could
    actually resolve from a handful of noisy rounds.
    """
    lo = np.concatenate(([np.log(3e-2)], np.log(0.15 * scales), [np.log(noise_floor)]))
    hi = np.concatenate(([np.log(1e4)], np.log(100.0 * scales), [np.log(1e2)]))
    return lo, hi


def _precompute_distances(x: np.ndarray, kind: str) -> np.ndarray:
    if kind == "se":
        diff = x[:, None, :] - x[None, :, :]
        return np.ascontiguousarray(diff * diff)
    return np.ascontiguousarray(0.5 * np.abs(x[:, None, :] - x[None, :, :]).sum(axis=-1))


def _compass_search(objective, theta0, max_evals, lo, hi, step0=1.0, step_min=0.01):
    """Derivative-free coordinate search on log parameters within a box.

    Probes +/- step on each coordinate, moves greedily on improvement, and
    halves the step after a full sweep without one.  Candidates are clipped
    into [lo, hi].  Returns the best point and value within the budget.
    """
    theta = np.clip(np.asarray(theta0, dtype=float), lo, hi)
    best = objective(theta)
    evals = 1
    step = step0
    while evals < max_evals and step >= step_min:
        moved = False
        for k in range(theta.size):
            if evals >= max_evals:
                break
            for sign in (1.0, -1.0):
                cand = theta.copy()
                cand[k] = min(hi[k], max(lo[k], cand[k] + sign * step))
                val = objective(cand)
                evals += 1
                if val > best:
                    theta = cand
                    best = val
                    moved = True
                    break
                if evals >= max_evals:
                    break
        if not moved:
            step *= 0.5
    return theta, best


def _theta_to_spec(theta, kind, p, noise_floor, y_var_scale=1.0) -> KernelSpec:
    return KernelSpec(
        kind=kind,
        signal_variance=float(np.exp(theta[0])) * y_var_scale,
        lengthscales=np.exp(theta[1:-1]),
        noise_variance=max(noise_floor, float(np.exp(theta[-1]))) * y_var_scale,
        wasserstein_p=p,
    )


def default_kernel_spec(
    inputs,
    targets,
    kind: str,
    *,
    wasserstein_p: float = DEFAULT_WASSERSTEIN_P,
    noise_floor: float = DEFAULT_NOISE_FLOOR,
) -> tuple[KernelSpec, float]:
    """The spec and mean offset a fit would start from, at the target scale."""
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).reshape(-1)
    y_sd = float(np.std(y))
    if y_sd < 1e-12:
        y_sd = 1.0
    tv = _precompute_distances(x, "wse") if kind == "wse" else None
    theta0 = _default_log_params(_param_scales(x, kind, tv, wasserstein_p))
    spec = _theta_to_spec(theta0, kind, wasserstein_p, noise_floor, y_sd * y_sd)
    return spec, float(np.mean(y))


def fit_gp(
    inputs,
    targets,
    kind: str,
    rng: np.random.Generator,
    *,
    wasserstein_p: float = DEFAULT_WASSERSTEIN_P,
    noise_floor: float = DEFAULT_NOISE_FLOOR,
    n_starts: int = 8,
    max_evals_per_start: int = 200,
) -> GpModel:
    """Fit kernel hyperparameters by maximum marginal likelihood.

    Targets are standardized internally; the returned model carries the
    rescaled hyperparameters and the training mean as its offset, so its
    posterior lives at the original target scale.  The search runs a compass
    sweep from the default spec plus ``n_starts - 1`` starts perturbed
    log-uniformly by factors in [1e-2, 1e2], each capped at
    ``max_evals_per_start`` likelihood evaluations, and keeps the best
    point seen anywhere, so the result is never worse than the default
    initialization.

    Args:
        inputs: Observed points, one row per observation.
        targets: Observed values.
        kind: "se" or "wse".
        rng: Source for the start perturbations.

    Returns:
        The conditioned model at the best hyperparameters found.
    """
    if kind not in ("se", "wse"):
        raise ValueError(f"unknown kernel kind {kind!r}")
    x = np.atleast_2d(np.asarray(inputs, dtype=float))
    y = np.asarray(targets, dtype=float).reshape(-1)
    if x.shape[0] != y.size:
        raise ValueError(f"{x.shape[0]} inputs but {y.size} targets")
    if y.size < 2:
        raise ValueError("need at least two observations to fit")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("inputs and targets must be finite")

    y_mean = float(np.mean(y))
    y_sd = float(np.std(y))
    if y_sd < 1e-12:
        y_sd = 1.0
    ys = (y - y_mean) / y_sd

    dists = _precompute_distances(x, kind)
    if kind == "se":

        def objective(theta):
            val = kernels.lml_se(
                dists,
                np.exp(-2.0 * theta[1:-1]),
                np.exp(theta[0]),
                max(noise_floor, np.exp(theta[-1])),
                ys,
            )
            return -np.inf if np.isnan(val) else val

    else:

        def objective(theta):
            val = kernels.lml_wse(
                dists,
                wasserstein_p,
                np.exp(theta[1]),
                np.exp(theta[0]),
                max(noise_floor, np.exp(theta[-1])),
                ys,
            )
            return -np.inf if np.isnan(val) else val

    scales = _param_scales(x, kind, dists if kind == "wse" else None, wasserstein_p)
    theta0 = _default_log_params(scales)
    lo, hi = _search_bounds(scales, noise_floor)
    log_span = np.log(1e2)
    best_theta, best_val = None, -np.inf
    for start in range(n_starts):
        if start == 0:
            init = theta0
        else:
            init = theta0 + rng.uniform(-log_span, log_span, theta0.size)
        theta, val = _compass_search(objective, init, max_evals_per_start, lo, hi)
        if val > best_val:
            best_theta, best_val = theta, val
    if best_theta is None or not np.isfinite(best_val):
        raise FitError("no hyperparameter candidate gave a finite likelihood")

    spec = _theta_to_spec(best_theta, kind, wasserstein_p, noise_floor, y_sd * y_sd)
    return GpModel(spec, x, y, mean_offset=y_mean)
