"""Experiment orchestration: configs, seeding, runs, CSV and chart output.

Every (policy, run) cell is derived purely from the master seed through named
SeedSequence streams, so cells can run in any order or in parallel and still
produce identical traces.  Budgets share a stream across policies within a
run; environment noise and policy randomness get one stream per policy so
adding a policy to a config never shifts the others.
"""

from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ImportError:
    import tomli as tomllib

from bora.acquisition import BetaSchedule
from bora.charts import cumulative_chart, gp_slice_chart
from bora.environments import (
    BUDGET_MODES,
    BernoulliJobsEnv,
    BudgetProcess,
    LinearMarketingEnv,
    bernoulli_step,
    draw_marketing_params,
    marketing_step,
    next_budget,
    utopic_cumulative,
)
from bora.errors import ConfigError
from bora.gp import DEFAULT_WASSERSTEIN_P, posterior_batch
from bora.measures import AllocationDecision
from bora.policies import (
    CANONICAL_POLICIES,
    N_INIT,
    BoraPolicy,
    ObservationRecord,
    RandomPolicy,
    SbfPolicy,
    fit_history_model,
)

CASES = ("bernoulli_jobs", "linear_marketing")

# Stream tags for SeedSequence spawning; distinct per purpose.
_STREAM_ENV_PARAMS = 11
_STREAM_BUDGET = 12
_STREAM_ENV_NOISE = 13
_STREAM_POLICY = 14
_STREAM_SLICE = 15


@dataclass(frozen=True)
class ExperimentConfig:
    case: str
    m: int
    horizon: int
    runs: int
    master_seed: int
    budget_mode: str
    budget_params: dict
    policies: tuple[str, ...]
    beta_mode: str = "fixed"
    beta_value: float = 2.0
    wasserstein_p: float = DEFAULT_WASSERSTEIN_P
    nu: tuple[float, ...] | None = None
    eta_seed: int | None = None
    out_dir: str | None = None


@dataclass
class RunTrace:
    """Everything one (policy, run) cell produced, in round order."""

    policy: str
    run: int
    budgets: np.ndarray
    rewards: np.ndarray
    amounts: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.rewards)


@dataclass
class Aggregate:
    policy: str
    mean_cumulative: np.ndarray
    sd_cumulative: np.ndarray


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _is_num(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _get_int(table: dict, key: str, minimum: int, where: str) -> int:
    _require(key in table, f"missing key {key!r} in {where}")
    v = table[key]
    _require(isinstance(v, int) and not isinstance(v, bool), f"{where}.{key} must be an integer")
    _require(v >= minimum, f"{where}.{key} must be >= {minimum}")
    return v


def _get_num(table: dict, key: str, where: str) -> float:
    _require(key in table, f"missing key {key!r} in {where}")
    v = table[key]
    _require(_is_num(v), f"{where}.{key} must be a number")
    return float(v)


_BUDGET_KEYS = {
    "constant": {"value"},
    "uniform": {"lo", "hi"},
    "gaussian": {"mean", "sd", "floor"},
    "gaussian_constant": {"mean", "sd", "floor"},
}
_TOP_KEYS = {
    "case", "m", "T", "runs", "master_seed", "policies",
    "budget", "beta", "env", "wasserstein_p", "out_dir",
}


def config_from_dict(data: dict) -> ExperimentConfig:
    """Validate a parsed config mapping and freeze it into a dataclass."""
    _require(isinstance(data, dict), "config must be a table")
    unknown = sorted(set(data) - _TOP_KEYS)
    _require(not unknown, f"unknown config keys: {', '.join(unknown)}")

    case = data.get("case")
    _require(case in CASES, f"case must be one of {', '.join(CASES)}")
    m = _get_int(data, "m", 2, "config")
    horizon = _get_int(data, "T", 1, "config")
    runs = _get_int(data, "runs", 1, "config")
    master_seed = _get_int(data, "master_seed", 0, "config")

    policies = data.get("policies")
    _require(
        isinstance(policies, list) and policies and all(isinstance(p, str) for p in policies),
        "policies must be a nonempty list of names",
    )
    bad = sorted(set(policies) - set(CANONICAL_POLICIES))
    _require(not bad, f"unknown policies: {', '.join(bad)}")
    _require(len(set(policies)) == len(policies), "policies must not repeat")
    _require(
        "sbf" not in policies or case == "bernoulli_jobs",
        "policy 'sbf' needs per-channel outcomes, which only bernoulli_jobs provides",
    )

    budget = data.get("budget")
    _require(isinstance(budget, dict), "missing [budget] table")
    mode = budget.get("mode")
    _require(mode in BUDGET_MODES, f"budget.mode must be one of {', '.join(BUDGET_MODES)}")
    allowed = _BUDGET_KEYS[mode]
    extra = sorted(set(budget) - allowed - {"mode"})
    _require(not extra, f"unexpected budget keys for mode {mode}: {', '.join(extra)}")
    params = {}
    if mode == "constant":
        params["value"] = _get_num(budget, "value", "budget")
    elif mode == "uniform":
        params["lo"] = _get_num(budget, "lo", "budget")
        params["hi"] = _get_num(budget, "hi", "budget")
    else:
        params["mean"] = _get_num(budget, "mean", "budget")
        params["sd"] = _get_num(budget, "sd", "budget")
        if "floor" in budget:
            params["floor"] = _get_num(budget, "floor", "budget")

    beta = data.get("beta", {})
    _require(isinstance(beta, dict), "[beta] must be a table")
    extra = sorted(set(beta) - {"mode", "value"})
    _require(not extra, f"unexpected beta keys: {', '.join(extra)}")
    beta_mode = beta.get("mode", "fixed")
    _require(beta_mode in ("fixed", "randomized"), "beta.mode must be fixed or randomized")
    beta_value = beta.get("value", 2.0)
    _require(_is_num(beta_value) and beta_value >= 0.0, "beta.value must be a nonnegative number")

    wp = data.get("wasserstein_p", DEFAULT_WASSERSTEIN_P)
    _require(_is_num(wp) and wp > 0.0, "wasserstein_p must be a positive number")

    env = data.get("env", {})
    _require(isinstance(env, dict), "[env] must be a table")
    nu = None
    eta_seed = None
    if case == "bernoulli_jobs":
        extra = sorted(set(env) - {"nu"})
        _require(not extra, f"unexpected env keys: {', '.join(extra)}")
        raw_nu = env.get("nu")
        _require(
            isinstance(raw_nu, list) and all(_is_num(v) for v in raw_nu),
            "env.nu must be a list of numbers",
        )
        _require(len(raw_nu) == m, f"env.nu must have m = {m} entries")
        _require(all(v > 0 for v in raw_nu), "env.nu entries must be positive")
        nu = tuple(float(v) for v in raw_nu)
    else:
        extra = sorted(set(env) - {"eta_seed"})
        _require(not extra, f"unexpected env keys: {', '.join(extra)}")
        if "eta_seed" in env:
            eta_seed = env["eta_seed"]
            _require(
                isinstance(eta_seed, int) and not isinstance(eta_seed, bool) and eta_seed >= 0,
                "env.eta_seed must be a nonnegative integer",
            )

    out_dir = data.get("out_dir")
    _require(out_dir is None or isinstance(out_dir, str), "out_dir must be a string")

    # Exercise the process constructor now so bad numbers fail at load time.
    _budget_process_from(mode, params, np.random.default_rng(0))

    return ExperimentConfig(
        case=case,
        m=m,
        horizon=horizon,
        runs=runs,
        master_seed=master_seed,
        budget_mode=mode,
        budget_params=params,
        policies=tuple(policies),
        beta_mode=beta_mode,
        beta_value=float(beta_value),
        wasserstein_p=float(wp),
        nu=nu,
        eta_seed=eta_seed,
        out_dir=out_dir,
    )


def load_config(path) -> ExperimentConfig:
    """Parse and validate a TOML experiment config."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        with open(p, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {p}: {exc}") from exc
    return config_from_dict(data)


def _rng(*parts: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(tuple(parts)))


def _budget_process_from(mode: str, params: dict, rng) -> BudgetProcess:
    return BudgetProcess(mode=mode, rng=rng, **params)


def _budget_sequence(config: ExperimentConfig, run: int, horizon: int) -> np.ndarray:
    proc = _budget_process_from(
        config.budget_mode,
        config.budget_params,
        _rng(config.master_seed, run, _STREAM_BUDGET),
    )
    return np.array([next_budget(proc, t) for t in range(1, horizon + 1)])


def _make_env(config: ExperimentConfig, run: int, pidx: int):
    noise_rng = _rng(config.master_seed, run, _STREAM_ENV_NOISE, pidx)
    if config.case == "bernoulli_jobs":
        return BernoulliJobsEnv(np.array(config.nu), noise_rng)
    if config.eta_seed is not None:
        param_rng = _rng(config.eta_seed, _STREAM_ENV_PARAMS)
    else:
        param_rng = _rng(config.master_seed, run, _STREAM_ENV_PARAMS)
    mu, sigma = draw_marketing_params(config.m, param_rng)
    return LinearMarketingEnv(mu, sigma, noise_rng)


def _make_policy(name: str, config: ExperimentConfig, run: int):
    pidx = CANONICAL_POLICIES.index(name)
    rng = _rng(config.master_seed, run, _STREAM_POLICY, pidx)
    if name.startswith("bora"):
        schedule = BetaSchedule(config.beta_mode, config.beta_value)
        return BoraPolicy(
            int(name[-1]),
            config.m,
            schedule,
            rng,
            wasserstein_p=config.wasserstein_p,
        )
    if name == "sbf":
        return SbfPolicy(config.m)
    return RandomPolicy(config.m, rng)


def _run_cell(
    config: ExperimentConfig, run: int, policy_name: str, horizon: int | None = None
) -> RunTrace:
    horizon = config.horizon if horizon is None else horizon
    pidx = CANONICAL_POLICIES.index(policy_name)
    budgets = _budget_sequence(config, run, horizon)
    env = _make_env(config, run, pidx)
    policy = _make_policy(policy_name, config, run)
    rewards = np.empty(horizon)
    amounts = np.empty((horizon, config.m))
    for t in range(1, horizon + 1):
        decision = policy.decide(float(budgets[t - 1]))
        if config.case == "bernoulli_jobs":
            reward, outcomes = bernoulli_step(env, decision)
        else:
            reward = marketing_step(env, decision)
            outcomes = None
        policy.observe(ObservationRecord(decision, reward, outcomes, t))
        rewards[t - 1] = reward
        amounts[t - 1] = decision.amounts
    return RunTrace(policy_name, run, budgets, rewards, amounts)


def _run_cell_args(args) -> RunTrace:
    return _run_cell(*args)


def _worker_count() -> int:
    raw = os.environ.get("BORA_WORKERS", "").strip()
    if not raw:
        return 1
    try:
        workers = int(raw)
    except ValueError as exc:
        raise ConfigError("BORA_WORKERS must be an integer") from exc
    return max(1, workers)


def run_experiment(config: ExperimentConfig) -> list[RunTrace]:
    """Run every (policy, run) cell and return traces in (policy, run) order.

    BORA_WORKERS > 1 fans the cells out over processes; results are merged
    back in order, so the output is identical to the serial run.
    """
    cells = [
        (config, run, name) for name in config.policies for run in range(config.runs)
    ]
    workers = _worker_count()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell_args, cells))
    return [_run_cell(*cell) for cell in cells]


def aggregate(traces: list[RunTrace]) -> list[Aggregate]:
    """Per-policy mean and sample standard deviation of cumulative reward.

    Policy order follows first appearance; run order does not matter.  With a
    single run the standard deviation is zero.
    """
    by_policy: dict[str, list[RunTrace]] = {}
    for tr in traces:
        by_policy.setdefault(tr.policy, []).append(tr)
    out = []
    for policy, group in by_policy.items():
        cum = np.stack([tr.cumulative for tr in sorted(group, key=lambda tr: tr.run)])
        mean = cum.mean(axis=0)
        sd = cum.std(axis=0, ddof=1) if cum.shape[0] > 1 else np.zeros(cum.shape[1])
        out.append(Aggregate(policy, mean, sd))
    return out


def _fmt9(v: float) -> str:
    return np.format_float_positional(
        float(v), precision=9, unique=False, fractional=False
    ).rstrip(".")


def emit_csv(traces: list[RunTrace], aggregates: list[Aggregate], out_dir) -> tuple[Path, Path]:
    """Write trace.csv and summary.csv with LF line endings."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.csv"
    with open(trace_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["policy", "run", "t", "budget", "reward", "cumulative_reward", "amounts"])
        for tr in traces:
            cum = tr.cumulative
            for t in range(tr.rewards.size):
                w.writerow([
                    tr.policy,
                    tr.run,
                    t + 1,
                    _fmt9(tr.budgets[t]),
                    _fmt9(tr.rewards[t]),
                    _fmt9(cum[t]),
                    ";".join(_fmt9(a) for a in tr.amounts[t]),
                ])
    summary_path = out / "summary.csv"
    with open(summary_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["policy", "t", "mean_cumulative", "sd_cumulative"])
        for agg in aggregates:
            for t in range(agg.mean_cumulative.size):
                w.writerow([
                    agg.policy,
                    t + 1,
                    _fmt9(agg.mean_cumulative[t]),
                    _fmt9(agg.sd_cumulative[t]),
                ])
    return trace_path, summary_path


def emit_chart(
    aggregates: list[Aggregate],
    out_dir,
    *,
    utopic: np.ndarray | None = None,
    title: str = "Cumulative reward",
    filename: str = "summary.svg",
) -> Path:
    """Write the cumulative-reward chart and return its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = [agg.policy for agg in aggregates]
    means = {agg.policy: agg.mean_cumulative for agg in aggregates}
    sds = {agg.policy: agg.sd_cumulative for agg in aggregates}
    svg = cumulative_chart(labels, means, sds, utopic=utopic, title=title)
    path = out / filename
    path.write_text(svg + "\n")
    return path


def resolve_out_dir(config: ExperimentConfig, override: str | None) -> Path:
    return Path(override if override is not None else (config.out_dir or "out"))


def run_and_emit(config: ExperimentConfig, out_dir) -> list[Path]:
    """Run the experiment and write trace, summary, and chart files."""
    traces = run_experiment(config)
    aggregates = aggregate(traces)
    utopic = None
    if config.case == "bernoulli_jobs":
        env = BernoulliJobsEnv(np.array(config.nu), np.random.default_rng(0))
        utopic = utopic_cumulative(env, config.horizon)
    trace_path, summary_path = emit_csv(traces, aggregates, out_dir)
    chart_path = emit_chart(
        aggregates, out_dir, utopic=utopic, title=f"Cumulative reward ({config.case})"
    )
    return [trace_path, summary_path, chart_path]


def gp_slice_svg(config: ExperimentConfig, policy_name: str, t: int) -> str:
    """Posterior slice of a BO policy's surrogate before its decision at round t.

    Replays run 0 of that policy up to round t - 1, refits the surrogate the
    policy would use, and sweeps channel 1 with the remaining budget spread
    evenly over the other channels.
    """
    if policy_name not in config.policies:
        raise ConfigError(f"policy {policy_name!r} is not in this config")
    if not policy_name.startswith("bora"):
        raise ConfigError("gp-slice only applies to the BO policies")
    if not 1 <= t <= config.horizon:
        raise ConfigError(f"t must lie in [1, {config.horizon}]")
    if t - 1 < max(2, N_INIT):
        raise ConfigError(
            f"the surrogate needs at least {max(2, N_INIT)} past rounds; use t > {max(2, N_INIT)}"
        )
    variant = int(policy_name[-1])
    pidx = CANONICAL_POLICIES.index(policy_name)
    trace = _run_cell(config, 0, policy_name, horizon=t - 1)
    budgets_t = _budget_sequence(config, 0, t)
    b = float(budgets_t[t - 1])
    history = [
        ObservationRecord(
            AllocationDecision(trace.amounts[k], float(trace.budgets[k])),
            float(trace.rewards[k]),
            None,
            k + 1,
        )
        for k in range(t - 1)
    ]
    model = fit_history_model(
        history,
        variant,
        _rng(config.master_seed, 0, _STREAM_SLICE, pidx, t),
        wasserstein_p=config.wasserstein_p,
    )
    m = config.m
    grid = np.linspace(0.0, b, 201)
    alloc = np.empty((grid.size, m))
    alloc[:, 0] = grid
    alloc[:, 1:] = ((b - grid) / (m - 1))[:, None]
    queries = alloc if variant == 1 else alloc / b
    means, variances = posterior_batch(model, queries)
    sds = np.sqrt(variances)
    marker_x = np.array([
        rec.decision.amounts[0] * (b / rec.decision.budget) for rec in history
    ])
    marker_y = np.array([rec.reward for rec in history])
    title = f"{policy_name} posterior at round {t} (run 0)"
    return gp_slice_chart(grid, means, sds, marker_x, marker_y, title)
