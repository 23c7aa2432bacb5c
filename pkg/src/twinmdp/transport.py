"""Exact discrete 1-Wasserstein distance and total variation distance.

The Wasserstein solver runs successive shortest paths with Dijkstra and
node potentials on the dense bipartite transportation graph. Costs may
have a nonzero diagonal (the tables produced by the twin metrics do), so
the dual is kept in its general two-potential form: the solver returns
(mu, nu) with mu_i - nu_j <= cost(i, j) and a matching objective value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

DIST_SUM_TOL = 1e-9

_MASS_EPS = 1e-13
_FLOW_EPS = 1e-15


class NotADistribution(ValueError):
    pass


class CostShapeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CostTable:
    """Nonnegative cost table with an admissible range cap."""

    costs: np.ndarray
    upper_bound: float

    def __post_init__(self):
        costs = np.array(self.costs, dtype=np.float64)
        if costs.ndim != 2:
            raise CostShapeMismatch(f"cost table must be 2-D, got shape {costs.shape}")
        if not np.all(np.isfinite(costs)):
            raise ValueError("cost table contains non-finite entries")
        tol = 1e-9 * max(1.0, self.upper_bound)
        if np.any(costs < -tol) or np.any(costs > self.upper_bound + tol):
            raise ValueError(
                f"cost entries must lie in [0, {self.upper_bound}] (within tolerance)"
            )
        costs.flags.writeable = False
        object.__setattr__(self, "costs", costs)


@dataclass(frozen=True)
class TransportSolution:
    """Optimal plan, dual potentials, and the shared objective value."""

    plan: np.ndarray
    potentials_mu: np.ndarray
    potentials_nu: np.ndarray
    value: float


@njit(cache=True)
def _ssp(supply, demand, cost, flow, pot):
    """Successive shortest paths on the dense transportation graph.

    Nodes 0..n-1 are sources, n..n+m-1 sinks. Potentials keep reduced costs
    nonnegative so Dijkstra applies throughout. Zero-mass entries are inert:
    they are never chosen as roots or terminals and carry no flow. Returns 0
    on success, 1 if the augmentation cap is hit.
    """
    n = supply.shape[0]
    m = demand.shape[0]
    nm = n + m
    rs = supply.copy()
    rd = demand.copy()
    dist = np.empty(nm)
    visited = np.empty(nm, np.bool_)
    parent = np.empty(nm, np.int64)
    max_augs = 4 * nm * nm + 64
    for _ in range(max_augs):
        src_left = False
        for i in range(n):
            if rs[i] > _MASS_EPS:
                src_left = True
                break
        if not src_left:
            return 0
        for v in range(nm):
            dist[v] = np.inf
            visited[v] = False
            parent[v] = -1
        for i in range(n):
            if rs[i] > _MASS_EPS:
                dist[i] = 0.0
        t = -1
        while True:
            u = -1
            best = np.inf
            for v in range(nm):
                if not visited[v] and dist[v] < best:
                    best = dist[v]
                    u = v
            if u < 0:
                break
            visited[u] = True
            if u >= n and rd[u - n] > _MASS_EPS:
                t = u
                break
            if u < n:
                for j in range(m):
                    v = n + j
                    if not visited[v]:
                        red = cost[u, j] + pot[u] - pot[v]
                        if red < 0.0:
                            red = 0.0
                        nd = dist[u] + red
                        if nd < dist[v]:
                            dist[v] = nd
                            parent[v] = u
            else:
                jj = u - n
                for i in range(n):
                    if not visited[i] and flow[i, jj] > _FLOW_EPS:
                        red = -cost[i, jj] + pot[u] - pot[i]
                        if red < 0.0:
                            red = 0.0
                        nd = dist[u] + red
                        if nd < dist[i]:
                            dist[i] = nd
                            parent[i] = u
        if t < 0:
            # remaining supply is rounding dust that no sink can absorb
            return 0
        bott = rd[t - n]
        node = t
        while parent[node] >= 0:
            p = parent[node]
            if p >= n:
                f = flow[node, p - n]
                if f < bott:
                    bott = f
            node = p
        if rs[node] < bott:
            bott = rs[node]
        origin = node
        node = t
        while parent[node] >= 0:
            p = parent[node]
            if p < n:
                flow[p, node - n] += bott
            else:
                flow[node, p - n] -= bott
            node = p
        rs[origin] -= bott
        rd[t - n] -= bott
        dmax = dist[t]
        for v in range(nm):
            dv = dist[v]
            if dv > dmax:
                dv = dmax
            pot[v] += dv
    return 1


@njit(cache=True)
def _w1_value(p, q, cost):
    n = p.shape[0]
    flow = np.zeros((n, n))
    pot = np.zeros(2 * n)
    status = _ssp(p, q, cost, flow, pot)
    if status != 0:
        return -1.0
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += flow[i, j] * cost[i, j]
    return total


@njit(cache=True)
def _w1_matrix(rows_p, rows_q, cost):
    """W1 between every row of rows_p and every row of rows_q under one cost."""
    n = rows_p.shape[0]
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            val = _w1_value(rows_p[i], rows_q[j], cost)
            if val < 0.0:
                out[i, j] = np.nan
            else:
                out[i, j] = val
    return out


def _check_distribution(p, size: int | None = None) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1:
        raise NotADistribution(f"expected a 1-D vector, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise NotADistribution(f"expected length {size}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise NotADistribution("distribution contains non-finite entries")
    if np.any(arr < 0.0):
        raise NotADistribution("distribution contains negative entries")
    if abs(float(arr.sum()) - 1.0) > DIST_SUM_TOL:
        raise NotADistribution(f"distribution sums to {arr.sum():.12g}")
    return arr


def _check_cost(cost, size: int) -> np.ndarray:
    costs = cost.costs if isinstance(cost, CostTable) else np.asarray(cost, dtype=np.float64)
    if costs.shape != (size, size):
        raise CostShapeMismatch(f"cost shape {costs.shape} != {(size, size)}")
    if not isinstance(cost, CostTable):
        if not np.all(np.isfinite(costs)):
            raise ValueError("cost table contains non-finite entries")
        if np.any(costs < 0.0):
            raise ValueError("cost table contains negative entries")
    return np.ascontiguousarray(costs)


def wasserstein(p, q, cost) -> TransportSolution:
    """Exact optimal transport between two distributions on the same support.

    Returns the optimal plan, a dual-feasible pair (mu, nu) with
    mu_i - nu_j <= cost(i, j) anchored at nu[0] = 0, and the common
    primal/dual objective value.
    """
    p = _check_distribution(p)
    q = _check_distribution(q, size=p.shape[0])
    n = p.shape[0]
    costs = _check_cost(cost, n)
    supply = p / p.sum()
    demand = q / q.sum()
    plan = np.zeros((n, n))
    pot = np.zeros(2 * n)
    status = _ssp(supply, demand, costs, plan, pot)
    if status != 0:
        raise RuntimeError("transport solver hit its augmentation cap")
    mu = -pot[:n]
    nu = -pot[n:]
    # zero-mass entries never enter the search; rebuild their potentials so
    # feasibility mu_i - nu_j <= cost(i, j) holds on every index pair
    src_mass = supply > 0.0
    snk_mass = demand > 0.0
    if not snk_mass.all():
        reachable = np.flatnonzero(src_mass)
        for j in np.flatnonzero(~snk_mass):
            nu[j] = float(np.max(mu[reachable] - costs[reachable, j]))
    if not src_mass.all():
        for i in np.flatnonzero(~src_mass):
            mu[i] = float(np.min(costs[i, :] + nu))
    shift = nu[0]
    mu = mu - shift
    nu = nu - shift
    value = float((plan * costs).sum())
    plan.flags.writeable = False
    mu.flags.writeable = False
    nu.flags.writeable = False
    return TransportSolution(plan=plan, potentials_mu=mu, potentials_nu=nu, value=value)


def tv_distance(p, q) -> float:
    """Total variation distance 0.5 * sum_i |p_i - q_i|."""
    p = _check_distribution(p)
    q = _check_distribution(q, size=p.shape[0])
    tv = 0.5 * float(np.abs(p - q).sum())
    return min(1.0, max(0.0, tv))


def tv_coupling_upper_bound(p, q, cost) -> float:
    """Cost of the keep-shared-mass-in-place coupling, an upper bound on W1.

    Moves the TV mass at the worst off-diagonal cost and leaves the shared
    mass in place at the worst diagonal cost.
    """
    p = _check_distribution(p)
    q = _check_distribution(q, size=p.shape[0])
    costs = _check_cost(cost, p.shape[0])
    tv = tv_distance(p, q)
    return tv * float(costs.max()) + (1.0 - tv) * float(np.diag(costs).max())
