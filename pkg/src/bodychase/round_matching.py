"""Rounding a fractional bipartite matching with a sampled stabilizer.

Each potential edge owns kappa = ceil(100(alpha+4) log(n) / delta^2)
fixed uniform thresholds; copy i of edge e is live when x_e exceeds
threshold i. The support of the copy multigraph is the stabilizer graph
H. When some vertex degree in the multigraph exceeds (1+delta)*kappa
the per-copy fractional certificate breaks down and a maximum matching
of the current graph is unioned in as a safety net.

On top of H we maintain a matching with no augmenting path of fewer
than 2*ceil(1/delta) edges, repaired greedily after every unit edge
change, which pins |M| within 1-delta of maximum.
"""

from __future__ import annotations

import math

import numpy as np

from .adapters import AdapterError, MatchingState
from .graphs import (
    apply_augmenting_path,
    build_adjacency,
    maximum_matching,
    shortest_augmenting_path,
)
from .rng import MATCHING_THRESHOLDS, substream

__all__ = ["Stabilizer", "MaintainedMatching", "stabilizer_step", "maintain_matching",
           "kappa_copies"]


def kappa_copies(alpha: float, delta: float, n: int) -> int:
    if not 0 < delta <= 1:
        raise AdapterError("delta must lie in (0, 1]")
    if n < 2:
        raise AdapterError("need at least two vertices")
    return math.ceil(100.0 * (alpha + 4.0) * math.log(n) / delta ** 2)


class Stabilizer:
    """Copy-threshold sampler over the potential edges of an instance."""

    def __init__(self, instance: MatchingState, alpha: float, delta: float,
                 n: int, seed: int):
        self.instance = instance
        self.alpha = float(alpha)
        self.delta = float(delta)
        self.n = int(n)
        self.seed = int(seed)
        self.kappa = kappa_copies(alpha, delta, n)
        self._thresholds: dict = {}
        self.counts: dict = {}
        self.support: set = set()
        self.case: str = "a"
        self.fallback: set = set()
        self.copy_step_recourse = 0
        self.copy_recourse_total = 0

    def _sorted_thresholds(self, edge) -> np.ndarray:
        got = self._thresholds.get(edge)
        if got is None:
            rng = substream(self.seed, MATCHING_THRESHOLDS, *edge)
            got = np.sort(rng.uniform(size=self.kappa))
            self._thresholds[edge] = got
        return got

    def copy_count(self, edge, value: float) -> int:
        # copies with threshold strictly below the fractional value
        return int(np.searchsorted(self._sorted_thresholds(edge), value, side="left"))

    def fractional_copy_value(self) -> float:
        return sum(self.counts.values()) / ((1.0 + self.delta) * self.kappa)


def stabilizer_step(x, stab: Stabilizer):
    """Recompute the stabilizer for the current point.

    Returns (support edge set, inserted edges, deleted edges). Copy-level
    recourse is accumulated on the stabilizer.
    """
    values = np.asarray(x.values if hasattr(x, "values") else x, dtype=float)
    inst = stab.instance
    counts = {}
    for e in sorted(inst.live):
        c = stab.copy_count(e, float(values[inst.coords[e]]))
        if c:
            counts[e] = c
    copy_delta = 0
    for e in counts.keys() | stab.counts.keys():
        copy_delta += abs(counts.get(e, 0) - stab.counts.get(e, 0))
    stab.copy_step_recourse = copy_delta
    stab.copy_recourse_total += copy_delta
    stab.counts = counts

    degree = {}
    for (u, v), c in counts.items():
        degree[u] = degree.get(u, 0) + c
        degree[v] = degree.get(v, 0) + c
    cap = (1.0 + stab.delta) * stab.kappa
    support = set(counts)
    if degree and max(degree.values()) > cap:
        stab.case = "b"
        partners = maximum_matching(sorted(inst.live))
        stab.fallback = {tuple(sorted((u, v))) for u, v in partners.items()}
        support |= stab.fallback
    else:
        stab.case = "a"
        stab.fallback = set()
    inserted = sorted(support - stab.support)
    deleted = sorted(stab.support - support)
    stab.support = support
    return support, inserted, deleted


class MaintainedMatching:
    """Matching over the stabilizer support with no short augmenting path."""

    def __init__(self, delta: float):
        if not 0 < delta <= 1:
            raise AdapterError("delta must lie in (0, 1]")
        self.k = math.ceil(1.0 / delta)
        self.max_path_edges = 2 * self.k - 1
        self.matching: dict = {}
        self.edges: set = set()
        self.recourse_total = 0
        self.step_recourse = 0

    def size(self) -> int:
        return len(self.matching) // 2

    def matched_pairs(self):
        return sorted({tuple(sorted((u, v))) for u, v in self.matching.items()})

    def _augment_to_stability(self) -> int:
        adj = build_adjacency(self.edges)
        changed = 0
        while True:
            path = shortest_augmenting_path(adj, self.matching, self.max_path_edges)
            if path is None:
                return changed
            apply_augmenting_path(self.matching, path)
            changed += len(path) - 1

    def apply_unit(self, op: str, edge) -> int:
        """One edge insertion or deletion in H, then restabilize.

        Returns the number of matching edge changes this unit caused.
        """
        edge = tuple(sorted(edge))
        changed = 0
        if op == "delete":
            self.edges.discard(edge)
            u, v = edge
            if self.matching.get(u) == v:
                del self.matching[u]
                del self.matching[v]
                changed += 1
        elif op == "insert":
            self.edges.add(edge)
        else:
            raise AdapterError("op must be insert or delete")
        changed += self._augment_to_stability()
        self.step_recourse = changed
        self.recourse_total += changed
        return changed


def maintain_matching(inserted, deleted, mm: MaintainedMatching):
    """Apply an H-delta one unit at a time; returns per-unit recourse list."""
    per_unit = []
    for e in sorted(deleted):
        per_unit.append(mm.apply_unit("delete", e))
    for e in sorted(inserted):
        per_unit.append(mm.apply_unit("insert", e))
    return per_unit
