"""Noise-sweep experiments: perturb a base MDP, train in the twin by exact
dynamic programming, deploy against the real MDP, and record regret next
to its certified bounds.

Exact DP stands in for a trained agent: it drives the twin-side
suboptimality term down to the solver residual, so each record isolates
the metric term of the transfer bound.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .envgen import AdmissionConfig, admission_mdp, perturb
from .mdp import DEFAULT_VALUE_TOL, StoppingRule, TabularMdp, greedy_policy, suboptimality, value_iteration
from .metrics import MdpPair, bisim_metric, compute_rmax, tv_metric, _default_metric_stop
from .serialize import dump_json, load_admission_config, load_mdp, parse_kv_config

CSV_HEADER = ["noise_level", "seed", "discrepancy_x", "regret", "bound_tv", "bound_bsm", "avg_reward_gap"]

REGRET_BOUND_TOL = 1e-6


class InvariantViolation(RuntimeError):
    """A certified bound was breached; treated as a defect, not a result."""


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str
    base_env: str | AdmissionConfig
    noise_grid: tuple[float, ...]
    trials_per_level: int
    gamma_override: float | None = None
    output_path: str = "experiment.csv"

    def __post_init__(self):
        if self.mode not in ("reward_sweep", "transition_sweep"):
            raise ValueError(f"mode must be reward_sweep or transition_sweep, got {self.mode!r}")
        grid = tuple(float(x) for x in self.noise_grid)
        if not grid:
            raise ValueError("noise_grid must be nonempty")
        if any(x < 0 for x in grid):
            raise ValueError("noise levels must be nonnegative")
        if list(grid) != sorted(grid):
            raise ValueError("noise_grid must be sorted ascending")
        if self.trials_per_level < 1:
            raise ValueError("trials_per_level must be >= 1")
        object.__setattr__(self, "noise_grid", grid)


@dataclass(frozen=True)
class ExperimentRecord:
    noise_level: float
    seed: int
    discrepancy_x: float
    regret: float
    bound_tv: float
    bound_bsm: float | None
    avg_reward_gap: float


def load_experiment_spec(path) -> ExperimentSpec:
    data = parse_kv_config(Path(path).read_text(encoding="utf-8"))
    required = {"mode", "base_env", "noise_grid", "trials_per_level"}
    missing = required - set(data)
    if missing:
        raise ValueError(f"experiment spec missing keys: {sorted(missing)}")
    base = data["base_env"]
    base_path = Path(base)
    if not base_path.is_absolute():
        base_path = Path(path).parent / base_path
    return ExperimentSpec(
        mode=str(data["mode"]),
        base_env=str(base_path),
        noise_grid=tuple(data["noise_grid"]),
        trials_per_level=int(data["trials_per_level"]),
        gamma_override=(float(data["gamma_override"]) if "gamma_override" in data else None),
        output_path=str(data.get("output_path", "experiment.csv")),
    )


def resolve_base_mdp(spec: ExperimentSpec, gamma_default: float = 0.9) -> TabularMdp:
    gamma = spec.gamma_override if spec.gamma_override is not None else gamma_default
    if isinstance(spec.base_env, AdmissionConfig):
        return admission_mdp(spec.base_env, gamma=gamma)
    path = Path(spec.base_env)
    if path.suffix == ".json":
        mdp = load_mdp(path)
        if spec.gamma_override is not None and mdp.gamma != spec.gamma_override:
            mdp = TabularMdp(
                num_states=mdp.num_states,
                num_actions=mdp.num_actions,
                gamma=spec.gamma_override,
                rewards=mdp.rewards,
                transitions=mdp.transitions,
            )
        return mdp
    return admission_mdp(load_admission_config(path), gamma=gamma)


def trial_seed(base_seed: int, level_index: int, trial_index: int) -> int:
    seq = np.random.SeedSequence([base_seed % (2**63), level_index, trial_index])
    return int(seq.generate_state(1)[0])


def rollout_average_reward(
    mdp: TabularMdp, pi: np.ndarray, horizon: int, n_rollouts: int, rng: np.random.Generator
) -> float:
    """Mean per-step reward over seeded rollouts from uniform start states."""
    cum = np.cumsum(mdp.transitions, axis=2)
    states = rng.integers(0, mdp.num_states, size=n_rollouts)
    total = np.zeros(n_rollouts)
    for _ in range(horizon):
        actions = pi[states]
        total += mdp.rewards[states, actions]
        u = rng.random(n_rollouts)
        rows = cum[states, actions]
        # count of cumulative entries below u = inverse-CDF index; the clamp
        # absorbs rows whose float sum falls a few ulp short of 1
        states = np.minimum((rows < u[:, None]).sum(axis=1), mdp.num_states - 1)
    return float(total.mean()) / horizon


def run_experiment(
    spec: ExperimentSpec,
    base_seed: int = 0,
    bsm_cap: int = 16,
    value_delta: float = DEFAULT_VALUE_TOL,
) -> tuple[list[ExperimentRecord], dict]:
    """Run the sweep and return (records, summary). Does not write files."""
    real = resolve_base_mdp(spec)
    gamma = real.gamma
    stop = StoppingRule(delta=value_delta)
    v_star_real = value_iteration(real, stop)
    pi_star_real = greedy_policy(real, v_star_real)
    horizon = math.ceil(10.0 / (1.0 - gamma))
    records: list[ExperimentRecord] = []
    for level_index, noise in enumerate(spec.noise_grid):
        for trial_index in range(spec.trials_per_level):
            seed = trial_seed(base_seed, level_index, trial_index)
            reward_noise = noise if spec.mode == "reward_sweep" else 0.0
            transition_noise = noise if spec.mode == "transition_sweep" else 0.0
            twin = perturb(real, reward_noise, transition_noise, seed)
            pair = MdpPair(real=real, twin=twin)
            v_star_twin = value_iteration(twin, stop)
            pi = greedy_policy(twin, v_star_twin)
            dt_sub = suboptimality(twin, pi, v_star=v_star_twin, delta=value_delta)
            regret = suboptimality(real, pi, v_star=v_star_real, delta=value_delta)
            if spec.mode == "reward_sweep":
                discrepancy = float(np.abs(real.rewards - twin.rewards).max())
            else:
                discrepancy = float(
                    (0.5 * np.abs(real.transitions - twin.transitions).sum(axis=2)).max()
                )
            diag = tv_metric(pair)
            policy_term = (1.0 + gamma) / (1.0 - gamma) * dt_sub
            bound_tv = 2.0 / (1.0 - gamma) ** 2 * float(diag.d_tv.max()) + policy_term
            bound_bsm = None
            if real.num_states <= bsm_cap:
                table = bisim_metric(pair, _default_metric_stop(gamma))
                max_dbar = float(np.diag(table.d).max()) + table.apriori_error
                bound_bsm = 2.0 / (1.0 - gamma) * max_dbar + policy_term
            if regret > bound_tv + REGRET_BOUND_TOL:
                raise InvariantViolation(
                    f"regret {regret} exceeds bound_tv {bound_tv} at noise {noise}, seed {seed}"
                )
            rng = np.random.default_rng([seed, 1])
            gap = rollout_average_reward(
                real, pi_star_real, horizon, 64, rng
            ) - rollout_average_reward(real, pi, horizon, 64, np.random.default_rng([seed, 2]))
            records.append(
                ExperimentRecord(
                    noise_level=float(noise),
                    seed=seed,
                    discrepancy_x=discrepancy,
                    regret=regret,
                    bound_tv=bound_tv,
                    bound_bsm=bound_bsm,
                    avg_reward_gap=gap,
                )
            )
    summary = summarize(spec, records)
    return records, summary


def summarize(spec: ExperimentSpec, records: list[ExperimentRecord]) -> dict:
    """Per-level worst-case aggregation plus trend statistics.

    Worst case means max over the level's trials. The slope is the least
    squares fit of worst regret against worst discrepancy, the analogue of
    the aggregated constant in the linearized bound.
    """
    levels = []
    for level_index, noise in enumerate(spec.noise_grid):
        rows = records[
            level_index * spec.trials_per_level : (level_index + 1) * spec.trials_per_level
        ]
        levels.append(
            {
                "noise_level": float(noise),
                "worst_regret": max(r.regret for r in rows),
                "max_discrepancy_x": max(r.discrepancy_x for r in rows),
                "worst_bound_tv": max(r.bound_tv for r in rows),
            }
        )
    xs = np.array([lv["max_discrepancy_x"] for lv in levels])
    ys = np.array([lv["worst_regret"] for lv in levels])
    if len(levels) >= 2 and float(np.ptp(xs)) > 0.0:
        slope, intercept = np.polyfit(xs, ys, 1)
        if float(np.std(ys)) > 0.0:
            pearson = float(np.corrcoef(xs, ys)[0, 1])
        else:
            pearson = 0.0
    else:
        slope, intercept, pearson = 0.0, float(ys.mean()), 0.0
    increasing = sum(
        1 for a, b in zip(ys[:-1], ys[1:]) if b >= a - 1e-12
    )
    monotone_fraction = increasing / max(1, len(ys) - 1)
    return {
        "mode": spec.mode,
        "trials_per_level": spec.trials_per_level,
        "aggregation": "max_over_trials",
        "levels": levels,
        "regret_slope": float(slope),
        "regret_intercept": float(intercept),
        "pearson_r": pearson,
        "monotone_fraction": float(monotone_fraction),
    }


def write_records_csv(records: list[ExperimentRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    repr(r.noise_level),
                    r.seed,
                    repr(r.discrepancy_x),
                    repr(r.regret),
                    repr(r.bound_tv),
                    "" if r.bound_bsm is None else repr(r.bound_bsm),
                    repr(r.avg_reward_gap),
                ]
            )


def summary_path_for(output_path) -> Path:
    return Path(output_path).with_suffix(".summary.json")


def run_and_write(spec: ExperimentSpec, base_seed: int = 0, bsm_cap: int = 16) -> dict:
    records, summary = run_experiment(spec, base_seed=base_seed, bsm_cap=bsm_cap)
    write_records_csv(records, spec.output_path)
    dump_json(summary, summary_path_for(spec.output_path))
    return summary
