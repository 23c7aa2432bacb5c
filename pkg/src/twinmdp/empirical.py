"""Sample-based transition models and the empirical TV-based twin metric.

Only the transition term is estimated from samples; rewards enter the
empirical metric exactly. The sample-size planner inverts a per-entry
Hoeffding bound, so its confidence statement is per state-action pair.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .metrics import DiagMetric, MdpPair, compute_rmax


class NoSamples(ValueError):
    pass


class SamplerOutOfRange(ValueError):
    pass


class TraceCoverageError(ValueError):
    """Raised when a trace lacks the planned sample count somewhere.

    Carries the deficient (state, action, have, need) tuples.
    """

    def __init__(self, deficits):
        self.deficits = list(deficits)
        listing = ", ".join(f"(s={s}, a={a}: {have}/{need})" for s, a, have, need in self.deficits)
        super().__init__(f"insufficient samples for {listing}")


class DegenerateRmaxWarning(UserWarning):
    pass


class GenerativeSampler(Protocol):
    num_states: int
    num_actions: int

    def sample_next(self, s: int, a: int, rng: np.random.Generator) -> int: ...


@dataclass(frozen=True)
class EmpiricalModel:
    """Next-state counts per (state, action) and the sample budget used."""

    counts: np.ndarray
    k_per_pair: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        k = np.array(self.k_per_pair, dtype=np.int64)
        if counts.ndim != 3 or k.shape != counts.shape[:2]:
            raise ValueError(f"shape mismatch: counts {counts.shape}, k {k.shape}")
        if np.any(counts < 0) or np.any(k < 0):
            raise ValueError("counts must be nonnegative")
        if np.any(counts.sum(axis=2) != k):
            raise ValueError("counts rows do not sum to k_per_pair")
        counts.flags.writeable = False
        k.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "k_per_pair", k)

    @property
    def num_states(self) -> int:
        return self.counts.shape[0]

    @property
    def num_actions(self) -> int:
        return self.counts.shape[1]

    def frequencies(self, s: int, a: int) -> np.ndarray:
        k = int(self.k_per_pair[s, a])
        if k == 0:
            raise NoSamples(f"no samples at state {s}, action {a}")
        return self.counts[s, a] / k


@dataclass(frozen=True)
class SamplePlan:
    """Target accuracy, miss probability, and the sample count achieving them."""

    epsilon: float
    alpha: float
    k_required: int


def sample_bound(
    epsilon: float, alpha: float, gamma: float, r_max: float, num_states: int
) -> float:
    """Hoeffding sample bound before rounding up to an integer."""
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must lie in (0, 1)")
    if not (0.0 < gamma < 1.0):
        raise ValueError("gamma must lie in (0, 1)")
    if r_max < 0.0:
        raise ValueError("r_max must be nonnegative")
    if num_states < 1:
        raise ValueError("num_states must be positive")
    return (
        -math.log(alpha / 2.0)
        * gamma**2
        * r_max**2
        * num_states**2
        / (2.0 * epsilon**2 * (1.0 - gamma) ** 2)
    )


def required_samples(
    epsilon: float, alpha: float, gamma: float, r_max: float, num_states: int
) -> int:
    """Samples per (state, action) pair for (epsilon, 1 - alpha) metric accuracy."""
    bound = sample_bound(epsilon, alpha, gamma, r_max, num_states)
    if r_max == 0.0:
        warnings.warn(
            "r_max is zero: the metric is identically zero and one sample suffices",
            DegenerateRmaxWarning,
        )
        return 1
    return max(1, math.ceil(bound))


def plan_samples(
    epsilon: float, alpha: float, gamma: float, r_max: float, num_states: int
) -> SamplePlan:
    k = required_samples(epsilon, alpha, gamma, r_max, num_states)
    return SamplePlan(epsilon=epsilon, alpha=alpha, k_required=k)


def collect(sampler: GenerativeSampler, k: int, seed: int) -> EmpiricalModel:
    """Draw exactly k next-states for every (state, action) pair.

    Each pair gets its own counter-derived RNG stream, so the result does
    not depend on visit order and is reproducible from the seed alone.
    Samplers may expose a vectorized `sample_many(s, a, k, rng)`; it must
    consume the stream exactly like repeated `sample_next` calls.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n_states = sampler.num_states
    n_actions = sampler.num_actions
    counts = np.zeros((n_states, n_actions, n_states), dtype=np.int64)
    base = seed % (2**63)
    batched = hasattr(sampler, "sample_many")
    for s in range(n_states):
        for a in range(n_actions):
            rng = np.random.default_rng([base, s, a])
            if batched:
                draws = np.asarray(sampler.sample_many(s, a, k, rng), dtype=np.int64)
            else:
                draws = np.fromiter(
                    (sampler.sample_next(s, a, rng) for _ in range(k)), np.int64, count=k
                )
            if draws.min() < 0 or draws.max() >= n_states:
                bad = int(draws[(draws < 0) | (draws >= n_states)][0])
                raise SamplerOutOfRange(
                    f"sampler returned state {bad} at (s={s}, a={a}), valid range [0, {n_states})"
                )
            counts[s, a] = np.bincount(draws, minlength=n_states)
    return EmpiricalModel(counts=counts, k_per_pair=np.full((n_states, n_actions), k, dtype=np.int64))


class MdpSampler:
    """Generative sampler backed by a known transition table."""

    def __init__(self, mdp):
        self.num_states = mdp.num_states
        self.num_actions = mdp.num_actions
        self._cum = np.cumsum(mdp.transitions, axis=2)

    def sample_next(self, s: int, a: int, rng: np.random.Generator) -> int:
        u = rng.random()
        return min(int(np.searchsorted(self._cum[s, a], u, side="right")), self.num_states - 1)

    def sample_many(self, s: int, a: int, k: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(k)
        idx = np.searchsorted(self._cum[s, a], u, side="right")
        return np.minimum(idx, self.num_states - 1).astype(np.int64)


def empirical_tv(model_p: EmpiricalModel, model_q: EmpiricalModel, s: int, a: int) -> float:
    """TV distance between the two empirical next-state distributions at (s, a)."""
    tv = 0.5 * float(np.abs(model_p.frequencies(s, a) - model_q.frequencies(s, a)).sum())
    return min(1.0, max(0.0, tv))


def _full_frequencies(model: EmpiricalModel) -> np.ndarray:
    missing = np.argwhere(model.k_per_pair == 0)
    if len(missing):
        s, a = missing[0]
        raise NoSamples(f"no samples at state {int(s)}, action {int(a)}")
    return model.counts / model.k_per_pair[:, :, None]


def empirical_tv_metric(
    pair: MdpPair, model_real: EmpiricalModel, model_twin: EmpiricalModel
) -> DiagMetric:
    """Diagonal TV metric with sampled transitions and exact rewards."""
    for model in (model_real, model_twin):
        if (model.num_states, model.num_actions) != pair.real.shape:
            raise ValueError(
                f"model shape {(model.num_states, model.num_actions)} != MDP shape {pair.real.shape}"
            )
    r_max = compute_rmax(pair)
    gamma = pair.gamma
    coef = gamma * r_max / (1.0 - gamma)
    tv_hat = 0.5 * np.abs(_full_frequencies(model_real) - _full_frequencies(model_twin)).sum(axis=2)
    rdiff = np.abs(pair.real.rewards - pair.twin.rewards)
    return DiagMetric(d_tv=(rdiff + coef * tv_hat).max(axis=1), r_max=r_max)


def coverage_deficits(model: EmpiricalModel, k_required: int) -> list[tuple[int, int, int, int]]:
    """(state, action, have, need) rows where the sample budget is not met."""
    out = []
    for s in range(model.num_states):
        for a in range(model.num_actions):
            have = int(model.k_per_pair[s, a])
            if have < k_required:
                out.append((s, a, have, k_required))
    return out


def require_coverage(model: EmpiricalModel, k_required: int) -> EmpiricalModel:
    deficits = coverage_deficits(model, k_required)
    if deficits:
        raise TraceCoverageError(deficits)
    return model
