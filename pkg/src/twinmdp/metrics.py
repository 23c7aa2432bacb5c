"""Twin-MDP bisimulation metrics and certified policy-transfer bounds.

Given a real MDP and a twin sharing states, actions, and discount, the
core metric is the least fixed point of

    d(i, j) = max_a { |R(i, a) - R'(j, a)| + gamma * W1(P(.|i,a), P'(.|j,a); d) }

computed by iterating from zero. After n iterations the truncation error
is at most gamma^n * r_max / (1 - gamma), and every bound reported here
adds that certificate so it never understates the limit. A cheap variant
replaces the transport term with total variation at the cost of an extra
1/(1 - gamma) factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mdp import (
    DEFAULT_VALUE_TOL,
    StoppingRule,
    TabularMdp,
    suboptimality,
    value_iteration,
)
from .transport import _w1_matrix


class ShapeMismatch(ValueError):
    pass


class GammaMismatch(ValueError):
    pass


@dataclass(frozen=True)
class MdpPair:
    """A (real, twin) couple sharing state space, action space, and discount."""

    real: TabularMdp
    twin: TabularMdp

    def __post_init__(self):
        if self.real.shape != self.twin.shape:
            raise ShapeMismatch(
                f"real {self.real.shape} vs twin {self.twin.shape}"
            )
        if self.real.gamma != self.twin.gamma:
            raise GammaMismatch(
                f"real gamma {self.real.gamma} vs twin gamma {self.twin.gamma}"
            )

    @property
    def gamma(self) -> float:
        return self.real.gamma

    @property
    def num_states(self) -> int:
        return self.real.num_states


@dataclass(frozen=True)
class MetricTable:
    """Iterated metric d_n with its a-priori truncation certificate."""

    d: np.ndarray
    iterations: int
    apriori_error: float
    r_max: float

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64)
        d.flags.writeable = False
        object.__setattr__(self, "d", d)


@dataclass(frozen=True)
class DiagMetric:
    """Diagonal-only metric built from total variation distances."""

    d_tv: np.ndarray
    r_max: float

    def __post_init__(self):
        d_tv = np.array(self.d_tv, dtype=np.float64)
        d_tv.flags.writeable = False
        object.__setattr__(self, "d_tv", d_tv)


@dataclass(frozen=True)
class BoundReport:
    """Every term of the two-tier transfer bound, itemized for audit.

    max_dbar_diag already includes the truncation certificate, so
    bound_bsm is a valid upper bound for the untruncated metric bound.
    bound_bsm is None when the transport-based tier was skipped.
    """

    max_dbar_diag: float | None
    max_dtv_diag: float
    dt_suboptimality: float
    bound_bsm: float | None
    bound_tv: float
    actual_regret: float


@dataclass(frozen=True)
class CheckOutcome:
    """Result of an inequality sweep.

    worst_margin is the largest LHS - RHS seen; the check passes when it
    does not exceed the tolerance. location is the argmax index tuple.
    """

    passed: bool
    worst_margin: float
    location: tuple
    tolerance: float


def compute_rmax(pair: MdpPair) -> float:
    """Largest reward discrepancy max over (i, j, a) of |R(i,a) - R'(j,a)|.

    The max runs over all state pairs, so it is generally positive even
    for identical MDPs unless the reward is constant per action.
    """
    r = pair.real.rewards
    rp = pair.twin.rewards
    per_action = np.maximum(r.max(axis=0) - rp.min(axis=0), rp.max(axis=0) - r.min(axis=0))
    return max(float(per_action.max()), 0.0)


def metric_step(pair: MdpPair, d: np.ndarray) -> np.ndarray:
    """One application of the metric map to a cost table d."""
    d = np.ascontiguousarray(d, dtype=np.float64)
    out = None
    for a in range(pair.real.num_actions):
        rdiff = np.abs(pair.real.rewards[:, a][:, None] - pair.twin.rewards[:, a][None, :])
        w1 = _w1_matrix(
            np.ascontiguousarray(pair.real.transitions[:, a, :]),
            np.ascontiguousarray(pair.twin.transitions[:, a, :]),
            d,
        )
        if np.any(np.isnan(w1)):
            raise RuntimeError("transport solver failed inside the metric iteration")
        cand = rdiff + pair.gamma * w1
        out = cand if out is None else np.maximum(out, cand)
    return out


def metric_iterations_for(delta: float, gamma: float, r_max: float) -> int:
    """Iteration count n making gamma^n * r_max / (1 - gamma) <= delta."""
    if r_max == 0.0:
        return 1
    ratio = delta * (1.0 - gamma) / r_max
    if ratio >= 1.0:
        return 0
    n = max(0, math.ceil(math.log(ratio) / math.log(gamma)))
    while gamma**n * r_max / (1.0 - gamma) > delta:
        n += 1
    return n


def bisim_metric(pair: MdpPair, stop: StoppingRule) -> MetricTable:
    """Iterate the metric map from zero for a certified number of steps.

    stop.steps fixes n directly; stop.delta chooses the smallest n whose
    a-priori certificate gamma^n * r_max / (1 - gamma) is at most delta.
    A zero reward discrepancy collapses the codomain to {0}, so the zero
    table is returned immediately.
    """
    r_max = compute_rmax(pair)
    gamma = pair.gamma
    n_states = pair.num_states
    if r_max == 0.0:
        return MetricTable(
            d=np.zeros((n_states, n_states)), iterations=1, apriori_error=0.0, r_max=0.0
        )
    n = stop.steps if stop.steps is not None else metric_iterations_for(stop.delta, gamma, r_max)
    d = np.zeros((n_states, n_states))
    for _ in range(n):
        d_next = metric_step(pair, d)
        if np.array_equal(d_next, d):
            # exact fixed point in floating point: further steps are no-ops
            d = d_next
            break
        d = d_next
    apriori = gamma**n * r_max / (1.0 - gamma)
    return MetricTable(d=d, iterations=n, apriori_error=apriori, r_max=r_max)


def tv_metric(pair: MdpPair) -> DiagMetric:
    """Diagonal metric with total variation in place of optimal transport.

    Costs O(|A| |S|^2) in total, against the transport fixed point's
    O(|A| |S|^4 log |S|) per iteration.
    """
    r_max = compute_rmax(pair)
    gamma = pair.gamma
    coef = gamma * r_max / (1.0 - gamma)
    tv = 0.5 * np.abs(pair.real.transitions - pair.twin.transitions).sum(axis=2)
    rdiff = np.abs(pair.real.rewards - pair.twin.rewards)
    return DiagMetric(d_tv=(rdiff + coef * tv).max(axis=1), r_max=r_max)


def _default_metric_stop(gamma: float) -> StoppingRule:
    # Tight enough that the certificate padding keeps the transport tier
    # below the TV tier: 2 * apriori / (1 - gamma) <= 5e-8.
    return StoppingRule(delta=(1.0 - gamma) * 2.5e-8)


def transfer_bounds(
    pair: MdpPair,
    pi: np.ndarray,
    stop: StoppingRule | None = None,
    include_bsm: bool = True,
    value_delta: float = DEFAULT_VALUE_TOL,
) -> BoundReport:
    """Two-tier certified bound on the regret of a twin-trained policy.

    Tier one scales the metric diagonal by 2 / (1 - gamma); tier two
    replaces it with the TV diagonal at 2 / (1 - gamma)^2. Both add the
    twin-side suboptimality of pi scaled by (1 + gamma) / (1 - gamma).
    actual_regret is the directly measured gap on the real MDP, which is
    only computable here because the real model is fully known.
    """
    gamma = pair.gamma
    dt_sub = suboptimality(pair.twin, pi, delta=value_delta)
    actual = suboptimality(pair.real, pi, delta=value_delta)
    diag = tv_metric(pair)
    max_dtv = float(diag.d_tv.max())
    policy_term = (1.0 + gamma) / (1.0 - gamma) * dt_sub
    bound_tv = 2.0 / (1.0 - gamma) ** 2 * max_dtv + policy_term
    max_dbar = None
    bound_bsm = None
    if include_bsm:
        table = bisim_metric(pair, stop or _default_metric_stop(gamma))
        max_dbar = float(np.diag(table.d).max()) + table.apriori_error
        bound_bsm = 2.0 / (1.0 - gamma) * max_dbar + policy_term
    return BoundReport(
        max_dbar_diag=max_dbar,
        max_dtv_diag=max_dtv,
        dt_suboptimality=dt_sub,
        bound_bsm=bound_bsm,
        bound_tv=bound_tv,
        actual_regret=actual,
    )


def check_optimal_value_gap(
    pair: MdpPair,
    stop: StoppingRule,
    tolerance: float = 1e-7,
    value_delta: float = DEFAULT_VALUE_TOL,
) -> CheckOutcome:
    """Verify |V_real*(i) - V_twin*(j)| <= d_n(i, j) + certificate on all pairs."""
    table = bisim_metric(pair, stop)
    v_real = value_iteration(pair.real, StoppingRule(delta=value_delta))
    v_twin = value_iteration(pair.twin, StoppingRule(delta=value_delta))
    gap = np.abs(v_real.values[:, None] - v_twin.values[None, :])
    margin = gap - (table.d + table.apriori_error)
    worst = float(margin.max())
    loc = tuple(int(x) for x in np.unravel_index(int(np.argmax(margin)), margin.shape))
    return CheckOutcome(passed=worst <= tolerance, worst_margin=worst, location=loc, tolerance=tolerance)


def check_quadrilateral(
    metric: MetricTable,
    samples: int = 1000,
    seed: int = 0,
    exhaustive: bool = False,
    tolerance: float = 1e-9,
) -> CheckOutcome:
    """Check d(i,l) <= d(i,j) + d(k,j) + d(k,l) on quadruples of states.

    Exhaustive mode scans all |S|^4 quadruples, which subsumes the
    degenerate triangle-like form (j = k). Sampled mode draws `samples`
    quadruples and additionally checks the triangle-like form on each.
    """
    d = metric.d
    n = d.shape[0]
    if exhaustive:
        rhs = d[:, :, None, None] + d.T[None, :, :, None] + d[None, None, :, :]
        margin = d[:, None, None, :] - rhs
        worst = float(margin.max())
        loc = tuple(int(x) for x in np.unravel_index(int(np.argmax(margin)), margin.shape))
        return CheckOutcome(passed=worst <= tolerance, worst_margin=worst, location=loc, tolerance=tolerance)
    rng = np.random.default_rng(seed)
    quads = rng.integers(0, n, size=(max(1, samples), 4))
    i, j, k, l = quads.T
    margins = d[i, l] - (d[i, j] + d[k, j] + d[k, l])
    tri_margins = d[i, l] - (d[i, j] + d[j, j] + d[j, l])
    all_margins = np.concatenate([margins, tri_margins])
    worst_idx = int(np.argmax(all_margins))
    worst = float(all_margins[worst_idx])
    row = worst_idx % len(quads)
    if worst_idx < len(quads):
        loc = (int(i[row]), int(j[row]), int(k[row]), int(l[row]))
    else:
        loc = (int(i[row]), int(j[row]), int(j[row]), int(l[row]))
    return CheckOutcome(passed=worst <= tolerance, worst_margin=worst, location=loc, tolerance=tolerance)


def check_tv_dominance(
    pair: MdpPair, stop: StoppingRule, tolerance: float = 1e-7
) -> CheckOutcome:
    """Verify max_i d_n(i,i) <= max_i d_tv(i,i) / (1 - gamma).

    d_n underestimates the fixed point, so checking the truncated table
    is conservative in the safe direction.
    """
    table = bisim_metric(pair, stop)
    diag_metric = tv_metric(pair)
    lhs_values = np.diag(table.d)
    lhs = float(lhs_values.max())
    rhs = float(diag_metric.d_tv.max()) / (1.0 - pair.gamma)
    worst = lhs - rhs
    i = int(np.argmax(lhs_values))
    return CheckOutcome(passed=worst <= tolerance, worst_margin=worst, location=(i, i), tolerance=tolerance)


def check_convergence_envelope(
    pair: MdpPair,
    floor: float = 1e-9,
    tolerance: float = 1e-9,
) -> CheckOutcome:
    """Verify the per-iteration envelope d_N - d_n <= gamma^n r_max / (1-gamma).

    N is chosen so the certificate at N is below `floor`, making d_N a
    stand-in for the fixed point. Monotonicity of the iterates is checked
    along the way.
    """
    r_max = compute_rmax(pair)
    gamma = pair.gamma
    n_states = pair.num_states
    if r_max == 0.0:
        return CheckOutcome(passed=True, worst_margin=0.0, location=(0, 0, 0), tolerance=tolerance)
    big_n = metric_iterations_for(floor, gamma, r_max)
    iterates = [np.zeros((n_states, n_states))]
    d = iterates[0]
    for _ in range(big_n):
        d = metric_step(pair, d)
        iterates.append(d)
    final = iterates[-1]
    worst = -math.inf
    loc = (0, 0, 0)
    for n, d_n in enumerate(iterates):
        envelope = gamma**n * r_max / (1.0 - gamma)
        margin = (final - d_n) - envelope
        m = float(margin.max())
        if m > worst:
            worst = m
            i, j = np.unravel_index(int(np.argmax(margin)), margin.shape)
            loc = (n, int(i), int(j))
        if n + 1 < len(iterates):
            drop = float((d_n - iterates[n + 1]).max())
            if drop > tolerance:
                return CheckOutcome(passed=False, worst_margin=drop, location=(n, 0, 0), tolerance=tolerance)
    return CheckOutcome(passed=worst <= tolerance, worst_margin=worst, location=loc, tolerance=tolerance)
