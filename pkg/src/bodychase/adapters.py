"""Adapters compiling dynamic combinatorial problems into positive bodies.

Each adapter owns the mutable instance (sets and elements, graph edges,
jobs and machines), assigns one body coordinate per combinatorial
choice, and emits a normalized snapshot: covering and packing rows with
right-hand side 1 and strictly positive coefficients, plus the
coordinates that must currently be pinned at zero. Per-step optima are
computed exactly, since the bodies are defined in terms of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ChaseError, HalfspaceConstraint, PositiveBody
from .graphs import (
    GraphError,
    global_min_cut,
    is_connected,
    kruskal_mst,
    maximum_matching,
    two_color,
)
from .simplex import solve_inequality_lp

__all__ = [
    "AdapterError",
    "UpdateEvent",
    "BodySnapshot",
    "SetCoverState",
    "setcover_body",
    "MatchingState",
    "matching_body",
    "LoadBalanceState",
    "loadbalance_body",
    "MstState",
    "mst_separation",
]

EXHAUSTIVE_JOB_LIMIT = 12


class AdapterError(ChaseError):
    pass


@dataclass(frozen=True)
class UpdateEvent:
    problem: str
    op: str
    payload: dict

    def __post_init__(self):
        if self.op not in ("insert", "delete"):
            raise AdapterError("op must be insert or delete, got %r" % (self.op,))


@dataclass(frozen=True)
class BodySnapshot:
    covering: tuple
    packing: tuple
    frozen: tuple
    dimension: int
    normalization: dict = field(default_factory=dict)

    def body(self) -> PositiveBody:
        return PositiveBody(covering=self.covering, packing=self.packing)


# ---------------------------------------------------------------- set cover


class SetCoverState:
    """Fixed set system, dynamic universe of live elements."""

    def __init__(self, costs, memberships):
        self.costs = np.asarray(costs, dtype=float)
        if self.costs.ndim != 1 or (self.costs <= 0).any():
            raise AdapterError("set costs must be positive")
        self.sets = [frozenset(s) for s in memberships]
        if len(self.sets) != self.costs.shape[0]:
            raise AdapterError("costs and memberships disagree in length")
        self.live: set = set()

    @property
    def dimension(self) -> int:
        return len(self.sets)

    def covering_sets(self, element):
        return [i for i, s in enumerate(self.sets) if element in s]

    def frequency(self) -> int:
        universe = set().union(*self.sets) if self.sets else set()
        return max((len(self.covering_sets(u)) for u in universe), default=0)

    def insert(self, element):
        if element in self.live:
            raise AdapterError("element %r already live" % (element,))
        if not self.covering_sets(element):
            raise AdapterError("element %r is not covered by any set" % (element,))
        self.live.add(element)

    def delete(self, element):
        if element not in self.live:
            raise AdapterError("element %r is not live" % (element,))
        self.live.remove(element)

    def fractional_opt(self) -> float:
        """Exact optimum of the fractional cover LP over live elements."""
        if not self.live:
            return 0.0
        m = self.dimension
        rows = []
        for u in sorted(self.live):
            row = np.zeros(m)
            row[self.covering_sets(u)] = -1.0
            rows.append(row)
        res = solve_inequality_lp(self.costs, np.array(rows), -np.ones(len(rows)))
        if res.status != "optimal":
            raise AdapterError("cover LP reported %s" % res.status)
        return float(res.objective)


def setcover_body(state: SetCoverState, beta: float) -> BodySnapshot:
    if beta < 1.0:
        raise AdapterError("beta must be at least 1 for covering problems")
    covering = []
    for u in sorted(state.live):
        covering.append(
            HalfspaceConstraint.covering({i: 1.0 for i in state.covering_sets(u)})
        )
    opt = state.fractional_opt()
    packing = []
    if opt > 0.0:
        packing.append(
            HalfspaceConstraint.packing(
                {i: float(c) / (beta * opt) for i, c in enumerate(state.costs)}
            )
        )
    return BodySnapshot(tuple(covering), tuple(packing), (), state.dimension,
                        {"opt": opt, "beta": beta})


# ------------------------------------------------------------------ matching


def _edge_key(u, v):
    if u == v:
        raise AdapterError("self-loops are not allowed")
    return (u, v) if u <= v else (v, u)


class MatchingState:
    """Dynamic bipartite graph; one body coordinate per distinct edge."""

    def __init__(self):
        self.coords: dict = {}
        self.live: set = set()

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def insert(self, u, v):
        key = _edge_key(u, v)
        if key in self.live:
            raise AdapterError("edge %r is already live" % (key,))
        if two_color((), list(self.live) + [key]) is None:
            raise AdapterError("edge %r would close an odd cycle" % (key,))
        if key not in self.coords:
            self.coords[key] = len(self.coords)
        self.live.add(key)

    def delete(self, u, v):
        key = _edge_key(u, v)
        if key not in self.live:
            raise AdapterError("edge %r is not live" % (key,))
        self.live.remove(key)

    def optimum(self) -> int:
        return len(maximum_matching(sorted(self.live))) // 2

    def vertices(self):
        return sorted({v for e in self.live for v in e})


def matching_body(state: MatchingState, beta: float) -> BodySnapshot:
    if not 0.0 < beta <= 1.0:
        raise AdapterError("beta must lie in (0, 1] for matching")
    opt = state.optimum()
    covering = []
    if opt > 0:
        scale = 1.0 / (beta * opt)
        covering.append(
            HalfspaceConstraint.covering(
                {state.coords[e]: scale for e in sorted(state.live)}
            )
        )
    packing = []
    for v in state.vertices():
        incident = {state.coords[e]: 1.0 for e in sorted(state.live) if v in e}
        packing.append(HalfspaceConstraint.packing(incident))
    frozen = tuple(sorted(state.coords[e] for e in state.coords if e not in state.live))
    return BodySnapshot(tuple(covering), tuple(packing), frozen, state.dimension,
                        {"opt": float(opt), "beta": beta})


# ------------------------------------------------------------- load balancing


class LoadBalanceState:
    """Fixed machine pool, dynamic jobs with per-machine loads."""

    def __init__(self, machines):
        self.machines = tuple(machines)
        if not self.machines:
            raise AdapterError("need at least one machine")
        self.jobs: dict = {}
        self.live: set = set()
        self.coords: dict = {}

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def insert(self, job, loads):
        if job in self.live:
            raise AdapterError("job %r already live" % (job,))
        loads = {m: float(p) for m, p in loads.items()}
        if not loads:
            raise AdapterError("job %r has an empty machine set" % (job,))
        for m, p in loads.items():
            if m not in self.machines:
                raise AdapterError("job %r names unknown machine %r" % (job, m))
            if p <= 0:
                raise AdapterError("loads must be positive")
        if job in self.jobs and self.jobs[job] != loads:
            raise AdapterError("job id %r reused with different loads" % (job,))
        self.jobs[job] = loads
        for m in loads:
            self.coords.setdefault((m, job), len(self.coords))
        self.live.add(job)

    def delete(self, job):
        if job not in self.live:
            raise AdapterError("job %r is not live" % (job,))
        self.live.remove(job)

    def _greedy_makespan(self, jobs) -> float:
        load = {m: 0.0 for m in self.machines}
        for j in sorted(jobs, key=lambda j: -min(self.jobs[j].values())):
            m = min(self.jobs[j], key=lambda m: (load[m] + self.jobs[j][m], m))
            load[m] += self.jobs[j][m]
        return max(load.values())

    def _packs_within(self, jobs, guess) -> bool:
        load = {m: 0.0 for m in self.machines}

        def place(k):
            if k == len(jobs):
                return True
            j = jobs[k]
            for m in sorted(self.jobs[j], key=lambda m: (load[m], m)):
                p = self.jobs[j][m]
                if load[m] + p <= guess + 1e-9:
                    load[m] += p
                    if place(k + 1):
                        return True
                    load[m] -= p
            return False

        return place(0)

    def optimum(self):
        """Minimum integral makespan over live jobs.

        Exact up to EXHAUSTIVE_JOB_LIMIT live jobs; beyond that a greedy
        upper bound is declared instead (flagged in the second slot).
        """
        jobs = sorted(self.live)
        if not jobs:
            return 0.0, True
        upper = self._greedy_makespan(jobs)
        if len(jobs) > EXHAUSTIVE_JOB_LIMIT:
            return upper, False
        lower = max(min(self.jobs[j].values()) for j in jobs)
        # the optimal makespan is some machine's total, hence a subset sum
        candidates = set()
        for m in self.machines:
            sums = {0.0}
            for j in jobs:
                if m in self.jobs[j]:
                    sums |= {s + self.jobs[j][m] for s in sums if s + self.jobs[j][m] <= upper + 1e-9}
            candidates |= sums
        ordered = sorted(c for c in candidates if lower - 1e-9 <= c <= upper + 1e-9)
        jobs_by_options = sorted(jobs, key=lambda j: (len(self.jobs[j]), -min(self.jobs[j].values()), j))
        lo, hi = 0, len(ordered) - 1
        best = upper
        while lo <= hi:
            mid = (lo + hi) // 2
            if self._packs_within(jobs_by_options, ordered[mid]):
                best = ordered[mid]
                hi = mid - 1
            else:
                lo = mid + 1
        return best, True


def loadbalance_body(state: LoadBalanceState, beta: float) -> BodySnapshot:
    if beta < 1.0:
        raise AdapterError("beta must be at least 1 for load balancing")
    opt, exact = state.optimum()
    covering, packing, frozen = [], [], []
    eligible = {}
    for j in sorted(state.live):
        coeffs = {}
        for m, p in state.jobs[j].items():
            if p <= opt + 1e-9:
                coeffs[state.coords[(m, j)]] = 1.0
                eligible.setdefault(m, {})[state.coords[(m, j)]] = p
            else:
                frozen.append(state.coords[(m, j)])
        covering.append(HalfspaceConstraint.covering(coeffs))
    for m in state.machines:
        if m in eligible:
            packing.append(
                HalfspaceConstraint.packing(
                    {c: p / (beta * opt) for c, p in eligible[m].items()}
                )
            )
    for (m, j), c in state.coords.items():
        if j not in state.live:
            frozen.append(c)
    return BodySnapshot(tuple(covering), tuple(packing), tuple(sorted(set(frozen))),
                        state.dimension,
                        {"opt": opt, "beta": beta, "opt_exact": exact})


# ------------------------------------------------------------------------ mst


class MstState:
    """Dynamic graph on a fixed vertex set; coordinate per distinct edge."""

    def __init__(self, vertices):
        self.vertices = tuple(sorted(set(vertices)))
        if len(self.vertices) < 1:
            raise AdapterError("vertex set is empty")
        self.coords: dict = {}
        self.costs: dict = {}
        self.live: set = set()

    @property
    def dimension(self) -> int:
        return len(self.coords)

    def insert(self, u, v, cost):
        key = _edge_key(u, v)
        if u not in self.vertices or v not in self.vertices:
            raise AdapterError("edge %r leaves the vertex set" % (key,))
        if key in self.live:
            raise AdapterError("edge %r is already live" % (key,))
        cost = float(cost)
        if cost <= 0:
            raise AdapterError("edge costs must be positive")
        if key in self.costs and self.costs[key] != cost:
            raise AdapterError("edge %r reinserted with a different cost" % (key,))
        if key not in self.coords:
            self.coords[key] = len(self.coords)
        self.costs[key] = cost
        self.live.add(key)

    def delete(self, u, v):
        key = _edge_key(u, v)
        if key not in self.live:
            raise AdapterError("edge %r is not live" % (key,))
        self.live.remove(key)

    def frozen_coords(self):
        return tuple(sorted(self.coords[e] for e in self.coords if e not in self.live))

    def optimum(self) -> float:
        try:
            total, _ = kruskal_mst(self.vertices,
                                   [(u, v, self.costs[(u, v)]) for u, v in self.live])
        except GraphError as exc:
            raise AdapterError(str(exc)) from None
        return total

    def separation(self, values, cover_floor, pack_ceiling, beta):
        """One violated row of the cut body, or None.

        Covering side: the minimum cut of the graph weighted by the
        current point, if below cover_floor. Packing side: total cost
        against beta times the current tree optimum.
        """
        if beta < 1.0:
            raise AdapterError("beta must be at least 1 for tree covering")
        if len(self.vertices) < 2:
            return None
        if not is_connected(self.vertices, self.live):
            raise AdapterError("graph must stay connected")
        weighted = [
            (u, v, float(values[self.coords[(u, v)]])) for u, v in sorted(self.live)
        ]
        cut_value, side = global_min_cut(self.vertices, weighted)
        if cut_value < cover_floor:
            crossing = {
                self.coords[e]: 1.0
                for e in self.live
                if (e[0] in side) != (e[1] in side)
            }
            return HalfspaceConstraint.covering(crossing)
        opt = self.optimum()
        if opt <= 0:
            return None
        row = HalfspaceConstraint.packing(
            {self.coords[e]: self.costs[e] / (beta * opt) for e in sorted(self.live)}
        )
        if row.value_at(values) > pack_ceiling:
            return row
        return None


def mst_separation(state: MstState, x, beta: float, threshold: float):
    """Single-threshold form: covering below 1 - threshold, packing above
    1 + threshold."""
    return state.separation(np.asarray(x.values if hasattr(x, "values") else x,
                                       dtype=float),
                            1.0 - threshold, 1.0 + threshold, beta)
