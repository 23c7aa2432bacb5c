"""Finite tabular MDPs and exact dynamic-programming solvers.

An MDP is stored as dense (S, A) reward and (S, A, S) transition tables.
All solvers return a certified sup-norm error radius alongside the values,
so downstream bounds can account for truncation honestly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ROW_SUM_TOL = 1e-9
DEFAULT_VALUE_TOL = 1e-10

_MAX_SWEEPS = 200_000


class MdpValidationError(ValueError):
    """Base class for MDP construction failures."""


class RowNotStochastic(MdpValidationError):
    pass


class BadGamma(MdpValidationError):
    pass


class NonFiniteEntry(MdpValidationError):
    pass


class ActionOutOfRange(MdpValidationError):
    pass


def _frozen_array(x, dtype=np.float64) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TabularMdp:
    """Finite MDP with dense tables.

    rewards[s, a] is the deterministic reward, transitions[s, a, s'] the
    next-state probability. Rows are renormalized on construction when the
    drift is within ROW_SUM_TOL; larger drift is rejected. Arrays are made
    read-only so instances are safe to share across threads.
    """

    num_states: int
    num_actions: int
    gamma: float
    rewards: np.ndarray
    transitions: np.ndarray

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise BadGamma(f"gamma must lie strictly inside (0, 1), got {self.gamma}")
        if self.num_states < 1 or self.num_actions < 1:
            raise MdpValidationError("num_states and num_actions must be positive")
        rewards = np.array(self.rewards, dtype=np.float64)
        transitions = np.array(self.transitions, dtype=np.float64)
        if rewards.shape != (self.num_states, self.num_actions):
            raise MdpValidationError(
                f"rewards shape {rewards.shape} != {(self.num_states, self.num_actions)}"
            )
        expected = (self.num_states, self.num_actions, self.num_states)
        if transitions.shape != expected:
            raise MdpValidationError(f"transitions shape {transitions.shape} != {expected}")
        if not np.all(np.isfinite(rewards)):
            raise NonFiniteEntry("rewards contain non-finite entries")
        if not np.all(np.isfinite(transitions)):
            raise NonFiniteEntry("transitions contain non-finite entries")
        if np.any(transitions < 0.0):
            s, a, _ = np.unravel_index(int(np.argmin(transitions)), transitions.shape)
            raise RowNotStochastic(f"negative transition probability at state {s}, action {a}")
        row_sums = transitions.sum(axis=2)
        drift = np.abs(row_sums - 1.0)
        if np.any(drift > ROW_SUM_TOL):
            s, a = np.unravel_index(int(np.argmax(drift)), drift.shape)
            raise RowNotStochastic(
                f"row (state {s}, action {a}) sums to {row_sums[s, a]:.12g}"
            )
        transitions = transitions / row_sums[:, :, None]
        rewards.flags.writeable = False
        transitions.flags.writeable = False
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", transitions)

    @property
    def shape(self) -> tuple[int, int]:
        return self.num_states, self.num_actions


def validate_mdp(mdp: TabularMdp) -> TabularMdp:
    """Return the MDP if all construction invariants hold.

    TabularMdp already validates in __post_init__; this re-checks an
    instance that may have been built by other means (e.g. deserialized).
    """
    return TabularMdp(
        num_states=mdp.num_states,
        num_actions=mdp.num_actions,
        gamma=mdp.gamma,
        rewards=mdp.rewards,
        transitions=mdp.transitions,
    )


@dataclass(frozen=True)
class StoppingRule:
    """Either a fixed iteration count or a target certified error radius."""

    steps: int | None = None
    delta: float | None = None

    def __post_init__(self):
        if (self.steps is None) == (self.delta is None):
            raise ValueError("exactly one of steps / delta must be set")
        if self.steps is not None and self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.delta is not None and self.delta <= 0.0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class ValueVector:
    """State values plus a certified sup-norm distance to the exact fixed point."""

    values: np.ndarray
    residual: float

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))


def _bellman_backup(mdp: TabularMdp, v: np.ndarray) -> np.ndarray:
    s, a = mdp.shape
    q = mdp.rewards + mdp.gamma * (mdp.transitions.reshape(s * a, s) @ v).reshape(s, a)
    return q.max(axis=1)


def value_iteration(mdp: TabularMdp, stop: StoppingRule | None = None) -> ValueVector:
    """Iterate the optimal Bellman operator from V = 0.

    The residual is the a-posteriori contraction certificate
    gamma * ||V_n - V_{n-1}||_inf / (1 - gamma), a bound on ||V_n - V*||_inf.
    """
    stop = stop or StoppingRule(delta=DEFAULT_VALUE_TOL)
    gamma = mdp.gamma
    v = np.zeros(mdp.num_states)
    diff = math.inf
    if stop.steps is not None:
        for _ in range(stop.steps):
            v_next = _bellman_backup(mdp, v)
            diff = float(np.max(np.abs(v_next - v)))
            v = v_next
    else:
        for _ in range(_MAX_SWEEPS):
            v_next = _bellman_backup(mdp, v)
            diff = float(np.max(np.abs(v_next - v)))
            v = v_next
            if gamma * diff / (1.0 - gamma) <= stop.delta:
                break
        else:
            raise RuntimeError(
                f"value iteration did not reach delta={stop.delta} in {_MAX_SWEEPS} sweeps"
            )
    return ValueVector(values=v, residual=gamma * diff / (1.0 - gamma))


def _policy_tables(mdp: TabularMdp, pi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pi = np.asarray(pi, dtype=np.int64)
    if pi.shape != (mdp.num_states,):
        raise ActionOutOfRange(f"policy shape {pi.shape} != ({mdp.num_states},)")
    if np.any(pi < 0) or np.any(pi >= mdp.num_actions):
        bad = int(np.argmax((pi < 0) | (pi >= mdp.num_actions)))
        raise ActionOutOfRange(f"policy action {pi[bad]} at state {bad} out of range")
    idx = np.arange(mdp.num_states)
    return mdp.rewards[idx, pi], mdp.transitions[idx, pi, :]


def policy_evaluation(
    mdp: TabularMdp, pi: np.ndarray, stop: StoppingRule | None = None
) -> ValueVector:
    """Evaluate a deterministic policy.

    With a delta target the linear system (I - gamma * P_pi) V = R_pi is
    solved directly and the residual certificate comes from the Bellman
    backward error; with a fixed step count the map is iterated from 0.
    """
    stop = stop or StoppingRule(delta=DEFAULT_VALUE_TOL)
    gamma = mdp.gamma
    r_pi, p_pi = _policy_tables(mdp, pi)
    if stop.steps is not None:
        v = np.zeros(mdp.num_states)
        diff = math.inf
        for _ in range(stop.steps):
            v_next = r_pi + gamma * (p_pi @ v)
            diff = float(np.max(np.abs(v_next - v)))
            v = v_next
        return ValueVector(values=v, residual=gamma * diff / (1.0 - gamma))
    system = np.eye(mdp.num_states) - gamma * p_pi
    v = np.linalg.solve(system, r_pi)
    bellman_residual = float(np.max(np.abs(r_pi + gamma * (p_pi @ v) - v)))
    residual = bellman_residual / (1.0 - gamma)
    if residual > stop.delta:
        # Fall back to iterating from the direct solution; the system is a
        # contraction so each sweep shrinks the certificate by gamma.
        for _ in range(_MAX_SWEEPS):
            v = r_pi + gamma * (p_pi @ v)
            bellman_residual = float(np.max(np.abs(r_pi + gamma * (p_pi @ v) - v)))
            residual = bellman_residual / (1.0 - gamma)
            if residual <= stop.delta:
                break
        else:
            raise RuntimeError(f"policy evaluation did not reach delta={stop.delta}")
    return ValueVector(values=v, residual=residual)


def greedy_policy(mdp: TabularMdp, v: ValueVector | np.ndarray) -> np.ndarray:
    """One-step greedy policy; ties break toward the lowest action index."""
    values = v.values if isinstance(v, ValueVector) else np.asarray(v, dtype=np.float64)
    s, a = mdp.shape
    q = mdp.rewards + mdp.gamma * (mdp.transitions.reshape(s * a, s) @ values).reshape(s, a)
    return np.argmax(q, axis=1).astype(np.int64)


def suboptimality(
    mdp: TabularMdp,
    pi: np.ndarray,
    v_star: ValueVector | None = None,
    delta: float = DEFAULT_VALUE_TOL,
) -> float:
    """Worst-state value gap max_s {V*(s) - V^pi(s)} of a policy.

    Both solves are certified to `delta`; a gap that is negative within
    twice the combined residual is clamped to zero. `v_star` may be passed
    in to reuse a previously computed optimal value vector.
    """
    if v_star is None:
        v_star = value_iteration(mdp, StoppingRule(delta=delta))
    v_pi = policy_evaluation(mdp, pi, StoppingRule(delta=delta))
    gap = float(np.max(v_star.values - v_pi.values))
    slack = 2.0 * (v_star.residual + v_pi.residual)
    if gap < 0.0:
        if gap < -slack:
            raise RuntimeError(
                f"suboptimality {gap} negative beyond numerical slack {slack}"
            )
        gap = 0.0
    return gap
