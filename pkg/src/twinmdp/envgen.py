"""Construction of admission-control MDPs, random MDPs, and twin perturbations.

The admission model is a sliced network: requests arrive per slice as a
Poisson process, queue until admitted, and occupy multi-dimensional
resources for an exponential service time. Queued requests expire at the
slice's service rate (patience of about one service time), which keeps
queues live without tracking per-request ages. The continuous-time chain
is uniformized into a discrete-time kernel; admissions happen instantly
at each decision epoch before the next event fires.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .mdp import TabularMdp


class StateSpaceTooLarge(ValueError):
    pass


class InfeasibleDemand(ValueError):
    pass


@dataclass(frozen=True)
class AdmissionConfig:
    """Declarative description of a sliced-network admission problem.

    Defaults sketch three slices (broadband, machine-type, low-latency)
    competing for radio, computing, and storage units.
    """

    num_slices: int = 3
    resources: tuple[int, ...] = (6, 6, 6)
    demand: tuple[tuple[int, ...], ...] = ((2, 1, 1), (1, 2, 1), (1, 1, 2))
    arrival_rate: tuple[float, ...] = (1.5, 1.0, 0.8)
    service_rate: tuple[float, ...] = (1.0, 1.0, 1.2)
    queue_cap: tuple[int, ...] = (2, 2, 2)
    profit: tuple[float, ...] = (2.0, 1.0, 3.0)
    timeout_penalty: tuple[float, ...] = (0.5, 0.2, 1.0)

    def __post_init__(self):
        k = self.num_slices
        if k < 1:
            raise ValueError("num_slices must be positive")
        for name in ("demand", "arrival_rate", "service_rate", "queue_cap", "profit", "timeout_penalty"):
            if len(getattr(self, name)) != k:
                raise ValueError(f"{name} must have one entry per slice")
        if any(len(row) != len(self.resources) for row in self.demand):
            raise ValueError("each demand row must have one entry per resource")
        if any(r < 0 for r in self.resources):
            raise ValueError("resource capacities must be nonnegative")
        if any(d < 0 for row in self.demand for d in row):
            raise ValueError("demands must be nonnegative")
        if any(c < 0 for c in self.queue_cap):
            raise ValueError("queue_cap must be nonnegative")
        if any(x <= 0 for x in self.arrival_rate) or any(x <= 0 for x in self.service_rate):
            raise ValueError("rates must be positive")
        if any(p < 0 for p in self.timeout_penalty):
            raise ValueError("timeout penalties must be nonnegative")
        for s, row in enumerate(self.demand):
            if any(d > r for d, r in zip(row, self.resources)):
                raise InfeasibleDemand(
                    f"slice {s} demand {tuple(row)} exceeds capacity {tuple(self.resources)}"
                )


def _occupancy_caps(cfg: AdmissionConfig) -> list[int]:
    caps = []
    for k in range(cfg.num_slices):
        limits = [
            cfg.resources[r] // cfg.demand[k][r]
            for r in range(len(cfg.resources))
            if cfg.demand[k][r] > 0
        ]
        # a zero-demand slice consumes nothing; cap occupancy at the queue
        # depth so the state space stays finite
        caps.append(min(limits) if limits else cfg.queue_cap[k])
    return caps


def _resource_feasible(cfg: AdmissionConfig, occupancy) -> bool:
    for r in range(len(cfg.resources)):
        used = sum(occupancy[k] * cfg.demand[k][r] for k in range(cfg.num_slices))
        if used > cfg.resources[r]:
            return False
    return True


def admission_states(cfg: AdmissionConfig) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Enumerate (queue lengths, ongoing services) states in lexicographic order."""
    occ_caps = _occupancy_caps(cfg)
    queue_grid = itertools.product(*(range(c + 1) for c in cfg.queue_cap))
    occ_all = itertools.product(*(range(c + 1) for c in occ_caps))
    occ_feasible = [m for m in occ_all if _resource_feasible(cfg, m)]
    return [(q, m) for q in queue_grid for m in occ_feasible]


def admission_actions(cfg: AdmissionConfig, admit_max: int = 1) -> list[tuple[int, ...]]:
    """Per-slice admission counts; a slice never offers more than it can hold."""
    occ_caps = _occupancy_caps(cfg)
    ranges = [
        range(min(admit_max, cfg.queue_cap[k], occ_caps[k]) + 1)
        for k in range(cfg.num_slices)
    ]
    return list(itertools.product(*ranges))


def admission_mdp(
    cfg: AdmissionConfig,
    gamma: float = 0.9,
    admit_max: int = 1,
    state_cap: int = 20_000,
) -> TabularMdp:
    """Uniformized discrete-time admission MDP.

    An action first admits requests (trimmed to what is queued; admissions
    that would violate resources fall back to admitting nothing, so those
    rows replicate the no-admit action). One uniformized event then fires:
    an arrival (lost if the queue is full), a service completion, or a
    queue expiry. Rewards are the admission profit minus the expected
    expiry penalties of the post-admission state.
    """
    states = admission_states(cfg)
    if len(states) > state_cap:
        raise StateSpaceTooLarge(f"{len(states)} states exceeds cap {state_cap}")
    actions = admission_actions(cfg, admit_max)
    index = {s: i for i, s in enumerate(states)}
    n_slices = cfg.num_slices
    occ_caps = _occupancy_caps(cfg)
    theta = cfg.service_rate  # per-request patience rate
    uniform_rate = (
        sum(cfg.arrival_rate)
        + sum(cfg.queue_cap[k] * theta[k] for k in range(n_slices))
        + sum(occ_caps[k] * cfg.service_rate[k] for k in range(n_slices))
    )
    n_states = len(states)
    n_actions = len(actions)
    rewards = np.zeros((n_states, n_actions))
    transitions = np.zeros((n_states, n_actions, n_states))
    for si, (q, m) in enumerate(states):
        for ai, action in enumerate(actions):
            admit = tuple(min(action[k], q[k]) for k in range(n_slices))
            post_m = tuple(m[k] + admit[k] for k in range(n_slices))
            if not _resource_feasible(cfg, post_m):
                admit = (0,) * n_slices
                post_m = m
            post_q = tuple(q[k] - admit[k] for k in range(n_slices))
            profit = sum(cfg.profit[k] * admit[k] for k in range(n_slices))
            expiry_loss = sum(
                cfg.timeout_penalty[k] * post_q[k] * theta[k] / uniform_rate
                for k in range(n_slices)
            )
            rewards[si, ai] = profit - expiry_loss
            row = transitions[si, ai]
            post_idx = index[(post_q, post_m)]
            moved = 0.0
            for k in range(n_slices):
                p_arr = cfg.arrival_rate[k] / uniform_rate
                if post_q[k] < cfg.queue_cap[k]:
                    nxt = list(post_q)
                    nxt[k] += 1
                    row[index[(tuple(nxt), post_m)]] += p_arr
                    moved += p_arr
                # a full queue drops the arrival: the state does not move
                if post_m[k] > 0:
                    p_svc = post_m[k] * cfg.service_rate[k] / uniform_rate
                    nxt = list(post_m)
                    nxt[k] -= 1
                    row[index[(post_q, tuple(nxt))]] += p_svc
                    moved += p_svc
                if post_q[k] > 0:
                    p_exp = post_q[k] * theta[k] / uniform_rate
                    nxt = list(post_q)
                    nxt[k] -= 1
                    row[index[(tuple(nxt), post_m)]] += p_exp
                    moved += p_exp
            row[post_idx] += 1.0 - moved
    return TabularMdp(
        num_states=n_states,
        num_actions=n_actions,
        gamma=gamma,
        rewards=rewards,
        transitions=transitions,
    )


def random_mdp(
    num_states: int,
    num_actions: int,
    gamma: float,
    sparsity: float = 1.0,
    seed: int = 0,
) -> TabularMdp:
    """Random MDP with uniform rewards and Dirichlet-style transition rows.

    Each row's support has max(1, round(sparsity * num_states)) states
    chosen at random; weights are normalized unit exponentials.
    """
    if not (0.0 < sparsity <= 1.0):
        raise ValueError("sparsity must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    rewards = rng.random((num_states, num_actions))
    support = max(1, int(round(sparsity * num_states)))
    transitions = np.zeros((num_states, num_actions, num_states))
    for s in range(num_states):
        for a in range(num_actions):
            idx = rng.choice(num_states, size=support, replace=False)
            w = rng.exponential(1.0, size=support)
            total = w.sum()
            if total == 0.0:
                w = np.full(support, 1.0 / support)
                total = 1.0
            transitions[s, a, idx] = w / total
    return TabularMdp(
        num_states=num_states,
        num_actions=num_actions,
        gamma=gamma,
        rewards=rewards,
        transitions=transitions,
    )


def perturb(
    mdp: TabularMdp,
    reward_noise: float = 0.0,
    transition_noise: float = 0.0,
    seed: int = 0,
) -> TabularMdp:
    """Twin an MDP with bounded reward shifts and TV-bounded row mixtures.

    Rewards move by uniform noise in [-reward_noise, reward_noise]. Each
    transition row is mixed with a random stochastic row at a weight drawn
    in [0, transition_noise], so max_a TV(P, P') <= transition_noise by
    construction.
    """
    if not (reward_noise >= 0.0 and np.isfinite(reward_noise)):
        raise ValueError("reward_noise must be finite and nonnegative")
    if not (transition_noise >= 0.0 and np.isfinite(transition_noise)):
        raise ValueError("transition_noise must be finite and nonnegative")
    if reward_noise == 0.0 and transition_noise == 0.0:
        return mdp
    rng = np.random.default_rng(seed)
    rewards = mdp.rewards
    if reward_noise > 0.0:
        rewards = rewards + rng.uniform(-reward_noise, reward_noise, size=rewards.shape)
    transitions = mdp.transitions
    if transition_noise > 0.0:
        s, a, _ = transitions.shape
        eta = rng.uniform(0.0, transition_noise, size=(s, a))
        noise = rng.exponential(1.0, size=transitions.shape)
        noise /= noise.sum(axis=2, keepdims=True)
        transitions = (1.0 - eta[:, :, None]) * transitions + eta[:, :, None] * noise
    return TabularMdp(
        num_states=mdp.num_states,
        num_actions=mdp.num_actions,
        gamma=mdp.gamma,
        rewards=rewards,
        transitions=transitions,
    )
