"""Small deterministic graph routines shared by adapters and rounding.

Everything here is desk-scale and tie-broken by vertex label so that
runs replay bit-for-bit: BFS two-coloring, union-find connectivity,
Kruskal trees, a node-contraction global min cut, and bipartite
matching via shortest augmenting paths.
"""

from __future__ import annotations

from collections import deque

__all__ = [
    "GraphError",
    "two_color",
    "is_connected",
    "kruskal_mst",
    "global_min_cut",
    "build_adjacency",
    "shortest_augmenting_path",
    "apply_augmenting_path",
    "maximum_matching",
]


class GraphError(Exception):
    pass


def build_adjacency(edges, vertices=()):
    adj = {v: [] for v in vertices}
    for u, v in edges:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for v in adj:
        adj[v] = sorted(set(adj[v]))
    return adj


def two_color(vertices, edges):
    """BFS bipartition, or None when an odd cycle exists."""
    adj = build_adjacency(edges, vertices)
    color = {}
    for root in sorted(adj):
        if root in color:
            continue
        color[root] = 0
        queue = deque([root])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in color:
                    color[v] = 1 - color[u]
                    queue.append(v)
                elif color[v] == color[u]:
                    return None
    return color


class _UnionFind:
    def __init__(self, items):
        self.parent = {v: v for v in items}

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def is_connected(vertices, edges) -> bool:
    verts = set(vertices)
    if len(verts) <= 1:
        return True
    uf = _UnionFind(verts)
    parts = len(verts)
    for u, v in edges:
        if uf.union(u, v):
            parts -= 1
    return parts == 1


def kruskal_mst(vertices, edges):
    """Minimum spanning tree of (u, v, cost) edges.

    Returns (total cost, tree edges). Ties broken by (cost, u, v) for
    deterministic replay. Raises GraphError on a disconnected graph.
    """
    verts = set(vertices)
    uf = _UnionFind(verts)
    tree, total = [], 0.0
    for cost, u, v in sorted((c, u, v) for u, v, c in edges):
        if uf.union(u, v):
            tree.append((u, v, cost))
            total += cost
    if len(tree) != len(verts) - 1:
        raise GraphError("graph is disconnected")
    return total, tree


def global_min_cut(vertices, edges):
    """Global minimum cut of a nonnegatively weighted graph.

    Deterministic maximum-adjacency contraction: each phase orders the
    remaining supervertices by total weight into the grown set (smallest
    label on ties), records the cut separating the last vertex, and
    contracts the last two. Returns (cut value, frozenset of one side).
    """
    verts = sorted(set(vertices))
    if len(verts) < 2:
        raise GraphError("min cut needs at least two vertices")
    w = {v: {} for v in verts}
    for u, v, weight in edges:
        if u == v:
            continue
        if weight < 0:
            raise GraphError("negative edge weight")
        w[u][v] = w[u].get(v, 0.0) + weight
        w[v][u] = w[v].get(u, 0.0) + weight
    groups = {v: [v] for v in verts}
    active = list(verts)
    best_value, best_side = float("inf"), None
    while len(active) > 1:
        start = active[0]
        wsum = {v: w[start].get(v, 0.0) for v in active if v != start}
        order = [start]
        last_weight = 0.0
        while wsum:
            pick, pick_w = None, -1.0
            for v in sorted(wsum):
                if wsum[v] > pick_w:
                    pick, pick_w = v, wsum[v]
            order.append(pick)
            last_weight = pick_w
            del wsum[pick]
            for v, weight in w[pick].items():
                if v in wsum:
                    wsum[v] += weight
        t, s = order[-1], order[-2]
        if best_side is None or last_weight < best_value:
            best_value, best_side = last_weight, sorted(groups[t])
        for v, weight in w[t].items():
            if v == s:
                continue
            w[s][v] = w[s].get(v, 0.0) + weight
            w[v][s] = w[v].get(s, 0.0) + weight
        for v in list(w[t]):
            del w[v][t]
        del w[t]
        w[s].pop(t, None)
        groups[s].extend(groups[t])
        del groups[t]
        active.remove(t)
    return best_value, frozenset(best_side)


def shortest_augmenting_path(adj, matching, max_len=None):
    """Shortest augmenting path in a bipartite graph, or None.

    adj maps vertex -> sorted neighbors; matching maps both endpoints of
    each matched edge to each other. Paths longer than max_len edges are
    not reported. Layered BFS from every free vertex on one side.
    """
    color = two_color(adj.keys(), ((u, v) for u in adj for v in adj[u] if u < v))
    if color is None:
        raise GraphError("augmenting search requires a bipartite graph")
    left_free = sorted(v for v in adj if color[v] == 0 and v not in matching)
    parent = {v: None for v in left_free}
    queue = deque((v, 0) for v in left_free)
    while queue:
        u, depth = queue.popleft()
        if max_len is not None and depth + 1 > max_len:
            continue
        for v in adj[u]:
            if v in parent:
                continue
            parent[v] = u
            if v not in matching:
                path = [v]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                path.reverse()
                return path
            mate = matching[v]
            if mate not in parent:
                parent[mate] = v
                queue.append((mate, depth + 2))
    return None


def apply_augmenting_path(matching, path):
    """Flip matched and unmatched edges along an augmenting path in place."""
    if len(path) % 2 != 0:
        raise GraphError("augmenting path must have odd edge count")
    for v in path:
        mate = matching.pop(v, None)
        if mate is not None:
            matching.pop(mate, None)
    for i in range(0, len(path) - 1, 2):
        matching[path[i]] = path[i + 1]
        matching[path[i + 1]] = path[i]


def maximum_matching(edges, vertices=()):
    """Maximum bipartite matching as a symmetric partner map."""
    adj = build_adjacency(edges, vertices)
    matching = {}
    while True:
        path = shortest_augmenting_path(adj, matching)
        if path is None:
            return matching
        apply_augmenting_path(matching, path)
