"""Matching rounding: copy counts, case split, maintained matching."""

import numpy as np
import pytest

from bodychase.adapters import MatchingState, matching_body
from bodychase.core import FractionalPoint, chase_body
from bodychase.graphs import build_adjacency, maximum_matching, shortest_augmenting_path
from bodychase.round_matching import (
    MaintainedMatching,
    Stabilizer,
    kappa_copies,
    maintain_matching,
    stabilizer_step,
)


def test_kappa_arithmetic():
    # 100 * (1+4) * ln(16) / 0.25 = 2000 ln 16 = 5545.177...
    assert kappa_copies(1.0, 0.5, 16) == 5546
    assert kappa_copies(1.0, 1.0, 2) == 100 * 5 * np.log(2) // 1 + 1


def test_empty_point_empty_stabilizer():
    inst = MatchingState()
    inst.insert("a", "b")
    stab = Stabilizer(inst, alpha=1.0, delta=0.5, n=4, seed=3)
    support, inserted, deleted = stabilizer_step(np.zeros(1), stab)
    assert support == set() and inserted == [] and deleted == []
    assert stab.case == "a"


def test_saturated_edge_all_copies():
    inst = MatchingState()
    inst.insert("a", "b")
    stab = Stabilizer(inst, alpha=1.0, delta=0.5, n=4, seed=3)
    support, inserted, _ = stabilizer_step(np.ones(1), stab)
    assert support == {("a", "b")} and inserted == [("a", "b")]
    assert stab.counts[("a", "b")] == stab.kappa
    # kappa <= (1+delta) kappa, so the degree test stays in case a
    assert stab.case == "a"
    assert stab.copy_step_recourse == stab.kappa


def test_copy_count_matches_thresholds():
    inst = MatchingState()
    inst.insert(0, 1)
    stab = Stabilizer(inst, alpha=1.0, delta=1.0, n=4, seed=11)
    th = stab._sorted_thresholds((0, 1))
    for v in [0.0, float(th[0]), 0.3, 0.9, 1.0]:
        assert stab.copy_count((0, 1), v) == int((th < v).sum())


def test_insert_both_free_matches_immediately():
    mm = MaintainedMatching(delta=0.5)
    assert mm.apply_unit("insert", ("a", "b")) == 1
    assert mm.matched_pairs() == [("a", "b")]


def test_delete_matched_edge_then_augment():
    mm = MaintainedMatching(delta=0.5)
    mm.apply_unit("insert", ("b", "c"))
    mm.apply_unit("insert", ("a", "b"))
    assert mm.matched_pairs() == [("b", "c")]
    changed = mm.apply_unit("delete", ("b", "c"))
    # forced drop plus the length-1 augmentation through (a, b)
    assert changed == 2
    assert mm.matched_pairs() == [("a", "b")]


def test_k1_middle_matched_path_is_stable():
    mm = MaintainedMatching(delta=1.0)
    assert mm.k == 1
    mm.apply_unit("insert", ("b", "c"))
    mm.apply_unit("insert", ("a", "b"))
    mm.apply_unit("insert", ("c", "d"))
    # middle edge matched; the length-3 augmenting path is out of reach
    assert mm.matched_pairs() == [("b", "c")]
    adj = build_adjacency(mm.edges)
    assert shortest_augmenting_path(adj, mm.matching, 1) is None
    assert shortest_augmenting_path(adj, mm.matching, 3) is not None


def grow_dimension(x, dim):
    if x.dim == dim:
        return x
    values = np.zeros(dim)
    values[: x.dim] = x.values
    return FractionalPoint(values, np.ones(dim))


def drive_matching_pipeline(seed, delta, T=30, n=10):
    """Random inserts and deletes; chase the body, stabilize, maintain."""
    rng = np.random.default_rng(seed)
    inst = MatchingState()
    stab = Stabilizer(inst, alpha=1.0, delta=delta, n=n, seed=seed)
    mm = MaintainedMatching(delta)
    left = [("L", i) for i in range(n // 2)]
    right = [("R", i) for i in range(n // 2)]
    x_vals = np.zeros(0)
    per_update_recourse = []
    for _ in range(T):
        if inst.live and rng.random() < 0.3:
            u, v = sorted(inst.live)[int(rng.integers(len(inst.live)))]
            inst.delete(u, v)
        else:
            u = left[int(rng.integers(len(left)))]
            v = right[int(rng.integers(len(right)))]
            if (min(u, v), max(u, v)) in inst.live:
                continue
            inst.insert(u, v)
        dim = inst.dimension
        vals = np.zeros(dim)
        vals[: x_vals.shape[0]] = x_vals
        for c in (inst.coords[e] for e in inst.coords if e not in inst.live):
            vals[c] = 0.0
        x = FractionalPoint(vals, np.ones(dim))
        body = matching_body(inst, beta=1.0).body()
        x, _ = chase_body(x, body.find_violated, delta=0.5)
        x_vals = x.values
        _, inserted, deleted = stabilizer_step(x_vals, stab)
        for unit in maintain_matching(inserted, deleted, mm):
            per_update_recourse.append(unit)
        # invariants after each batch
        assert mm.edges == stab.support
        adj = build_adjacency(mm.edges)
        assert shortest_augmenting_path(adj, mm.matching, mm.max_path_edges) is None
        mu = len(maximum_matching(sorted(stab.support))) // 2
        assert mm.size() >= (1 - delta) * mu - 1e-12
    return per_update_recourse, mm, stab


@pytest.mark.parametrize("delta", [0.5, 1.0])
def test_pipeline_invariants_hold(delta):
    per_unit, mm, stab = drive_matching_pipeline(5, delta)
    bound = 2 * mm.k + 1
    assert all(r <= bound for r in per_unit)
    assert stab.case == "a"


def test_case_b_fallback_uses_maximum_matching():
    # force case b with a tiny kappa by inflating degrees artificially:
    # a star of many edges, all saturated, overloads the center vertex
    inst = MatchingState()
    hub = ("L", 0)
    for i in range(6):
        inst.insert(hub, ("R", i))
    stab = Stabilizer(inst, alpha=1.0, delta=0.5, n=4, seed=1)
    values = np.ones(inst.dimension)
    support, _, _ = stabilizer_step(values, stab)
    # center degree 6 kappa > (1.5) kappa
    assert stab.case == "b"
    assert len(stab.fallback) == 1
    assert stab.fallback <= support
