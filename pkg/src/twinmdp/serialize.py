"""File formats: MDP JSON, metric/bound/value JSON, key-value configs, traces.

All writers are deterministic: fixed key order, repr-exact floats, a
trailing newline, and no timestamps, so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .empirical import EmpiricalModel
from .envgen import AdmissionConfig
from .mdp import TabularMdp, ValueVector
from .metrics import BoundReport, DiagMetric, MetricTable
from .transport import TransportSolution


def mdp_to_dict(mdp: TabularMdp) -> dict:
    return {
        "num_states": mdp.num_states,
        "num_actions": mdp.num_actions,
        "gamma": mdp.gamma,
        "rewards": mdp.rewards.tolist(),
        "transitions": mdp.transitions.tolist(),
    }


def mdp_from_dict(data: dict) -> TabularMdp:
    try:
        return TabularMdp(
            num_states=int(data["num_states"]),
            num_actions=int(data["num_actions"]),
            gamma=float(data["gamma"]),
            rewards=data["rewards"],
            transitions=data["transitions"],
        )
    except KeyError as exc:
        raise ValueError(f"MDP JSON missing field {exc}") from exc


def load_mdp(path) -> TabularMdp:
    with open(path, encoding="utf-8") as fh:
        return mdp_from_dict(json.load(fh))


def save_mdp(mdp: TabularMdp, path) -> None:
    dump_json(mdp_to_dict(mdp), path)


def value_to_dict(v: ValueVector) -> dict:
    return {"values": v.values.tolist(), "residual": v.residual}


def policy_to_dict(pi) -> dict:
    return {"actions": [int(a) for a in np.asarray(pi)]}


def policy_from_dict(data: dict) -> np.ndarray:
    try:
        return np.asarray(data["actions"], dtype=np.int64)
    except KeyError as exc:
        raise ValueError(f"policy JSON missing field {exc}") from exc


def load_policy(path) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        return policy_from_dict(json.load(fh))


def metric_table_to_dict(table: MetricTable) -> dict:
    return {
        "n": table.iterations,
        "apriori_error": table.apriori_error,
        "r_max": table.r_max,
        "d": table.d.tolist(),
    }


def diag_metric_to_dict(diag: DiagMetric) -> dict:
    return {"d_tv": diag.d_tv.tolist(), "r_max": diag.r_max}


def bound_report_to_dict(report: BoundReport) -> dict:
    return {
        "max_dbar_diag": report.max_dbar_diag,
        "max_dtv_diag": report.max_dtv_diag,
        "dt_suboptimality": report.dt_suboptimality,
        "bound_bsm": report.bound_bsm,
        "bound_tv": report.bound_tv,
        "actual_regret": report.actual_regret,
    }


def transport_solution_to_dict(sol: TransportSolution) -> dict:
    return {
        "plan": sol.plan.tolist(),
        "mu": sol.potentials_mu.tolist(),
        "nu": sol.potentials_nu.tolist(),
        "value": sol.value,
    }


def dump_json(data, path) -> None:
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def parse_kv_config(text: str) -> dict:
    """Parse `key = value` lines; values are JSON fragments, # starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip()
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value  # bare strings (paths, mode names) need no quotes
    return out


_ADMISSION_KEYS = {
    "num_slices",
    "resources",
    "demand",
    "arrival_rate",
    "service_rate",
    "queue_cap",
    "profit",
    "timeout_penalty",
}


def admission_config_from_dict(data: dict) -> AdmissionConfig:
    unknown = set(data) - _ADMISSION_KEYS
    if unknown:
        raise ValueError(f"unknown admission config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key == "num_slices":
            kwargs[key] = int(value)
        elif key == "demand":
            kwargs[key] = tuple(tuple(int(x) for x in row) for row in value)
        elif key in ("resources", "queue_cap"):
            kwargs[key] = tuple(int(x) for x in value)
        else:
            kwargs[key] = tuple(float(x) for x in value)
    return AdmissionConfig(**kwargs)


def load_admission_config(path) -> AdmissionConfig:
    text = Path(path).read_text(encoding="utf-8")
    return admission_config_from_dict(parse_kv_config(text))


def read_trace(path, num_states: int, num_actions: int) -> EmpiricalModel:
    """Build an empirical model from `state,action,next_state` CSV rows."""
    counts = np.zeros((num_states, num_actions, num_states), dtype=np.int64)
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected `state,action,next_state`")
            try:
                s, a, ns = (int(x) for x in parts)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer field") from exc
            if not (0 <= s < num_states and 0 <= ns < num_states):
                raise ValueError(f"{path}:{lineno}: state out of range")
            if not (0 <= a < num_actions):
                raise ValueError(f"{path}:{lineno}: action out of range")
            counts[s, a, ns] += 1
    return EmpiricalModel(counts=counts, k_per_pair=counts.sum(axis=2))
