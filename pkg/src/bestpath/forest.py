"""Minimal AIC/BIC spanning forest under the forbidden-path constraint.

Kruskal's algorithm on penalized mutual information, with a union-find that
tracks whether each component already holds a discrete node.  Joining two
components that both hold discrete nodes is allowed only through a
discrete-discrete edge; this keeps the discrete nodes of every tree connected
among themselves, so no path between two discrete nodes runs through a
continuous one (the forest stays strongly decomposable).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .mi import MITable


class UnionFind:
    """Disjoint sets over ``0..n-1`` with a per-set "has discrete" flag."""

    def __init__(self, discrete: Sequence[bool]):
        self.parent = list(range(len(discrete)))
        self.size = [1] * len(discrete)
        self.has_discrete = [bool(d) for d in discrete]

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.has_discrete[ra] = self.has_discrete[ra] or self.has_discrete[rb]
        return ra


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    weight: float
    raw_i: float


@dataclass(frozen=True)
class Forest:
    """Undirected acyclic graph over variable indices."""

    names: tuple
    discrete: tuple
    edges: tuple = field(default=())

    @property
    def n_nodes(self) -> int:
        return len(self.names)

    @cached_property
    def adjacency(self) -> tuple:
        adj = [[] for _ in range(self.n_nodes)]
        for e in self.edges:
            adj[e.u].append(e.v)
            adj[e.v].append(e.u)
        return tuple(tuple(sorted(a)) for a in adj)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def neighbors(self, v: int) -> tuple:
        return self.adjacency[v]

    def edge_set(self) -> set:
        return {(e.u, e.v) for e in self.edges}

    @property
    def total_weight(self) -> float:
        return float(sum(e.weight for e in self.edges))

    def components(self) -> list[list[int]]:
        return components(self)

    def component_of(self, v: int) -> list[int]:
        for comp in components(self):
            if v in comp:
                return comp
        raise IndexError(v)

    def to_dict(self) -> dict:
        return {
            "nodes": [{"name": n, "kind": "discrete" if d else "continuous"}
                      for n, d in zip(self.names, self.discrete)],
            "edges": [{"u": self.names[e.u], "v": self.names[e.v], "i": e.raw_i,
                       "penalized": e.weight} for e in self.edges],
        }


def _edge_order(weights: np.ndarray, raw: np.ndarray) -> list[tuple[int, int]]:
    p = weights.shape[0]
    cand = [(u, v) for u in range(p) for v in range(u + 1, p)]
    # weight desc, then raw MI desc (orders infinite weights), then index pair asc
    cand.sort(key=lambda e: (-weights[e], -raw[e], e[0], e[1]))
    return cand


def max_weight_forest(weights, discrete: Sequence[bool], raw=None) -> list[tuple[int, int]]:
    """Greedy maximum-weight strongly decomposable forest.

    Parameters
    ----------
    weights : (p, p) array
        Symmetric edge weights; only strictly positive weights are used.
    discrete : sequence of bool
        Node kinds.
    raw : (p, p) array, optional
        Secondary sort key among equal weights (unpenalized MI).

    Returns
    -------
    list of (u, v) with u < v, in admission order.
    """
    weights = np.asarray(weights, dtype=np.float64)
    raw = weights if raw is None else np.asarray(raw, dtype=np.float64)
    if weights.shape != (len(discrete), len(discrete)):
        raise ValueError("weights must be p x p with p = len(discrete)")
    uf = UnionFind(discrete)
    chosen = []
    for u, v in _edge_order(weights, raw):
        if not weights[u, v] > 0.0:
            break
        ru, rv = uf.find(u), uf.find(v)
        if ru == rv:
            continue
        if uf.has_discrete[ru] and uf.has_discrete[rv] and not (discrete[u] and discrete[v]):
            continue
        uf.union(u, v)
        chosen.append((u, v))
        if len(chosen) == len(discrete) - 1:
            break
    return chosen


def build_forest(table: MITable, penalty: str = "bic") -> Forest:
    """Minimal AIC/BIC forest for the variables of ``table``."""
    weights = table.weights(penalty)
    raw = table.raw()
    np.fill_diagonal(raw, -np.inf)
    chosen = max_weight_forest(weights, table.discrete, raw)
    edges = tuple(Edge(u, v, float(weights[u, v]), float(raw[u, v])) for u, v in chosen)
    return Forest(tuple(table.names), tuple(bool(d) for d in table.discrete), edges)


def components(f: Forest) -> list[list[int]]:
    """Connected components (trees), each sorted, ordered by smallest node."""
    seen = [False] * f.n_nodes
    out = []
    for start in range(f.n_nodes):
        if seen[start]:
            continue
        comp, queue = [], deque([start])
        seen[start] = True
        while queue:
            x = queue.popleft()
            comp.append(x)
            for y in f.adjacency[x]:
                if not seen[y]:
                    seen[y] = True
                    queue.append(y)
        out.append(sorted(comp))
    return out


def tree_path(f: Forest, a: int, b: int) -> Optional[list[int]]:
    """Vertices on the unique a-b path, or None if a and b are disconnected."""
    prev = {a: None}
    queue = deque([a])
    while queue:
        x = queue.popleft()
        if x == b:
            break
        for y in f.adjacency[x]:
            if y not in prev:
                prev[y] = x
                queue.append(y)
    if b not in prev:
        return None
    path = [b]
    while path[-1] != a:
        path.append(prev[path[-1]])
    return path[::-1]


def forbidden_paths(f: Forest) -> list[tuple[int, int]]:
    """Discrete pairs whose connecting path passes through a continuous node."""
    disc = [i for i in range(f.n_nodes) if f.discrete[i]]
    bad = []
    for i, a in enumerate(disc):
        for b in disc[i + 1:]:
            path = tree_path(f, a, b)
            if path is not None and not all(f.discrete[x] for x in path):
                bad.append((a, b))
    return bad


_FILL = {"discrete": "yellow", "continuous": "green", "target": "red"}


def _quote(s: str) -> str:
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(f: Forest, names: Optional[Sequence[str]] = None, target: Optional[int] = None,
               weights: bool = False) -> str:
    """Graphviz ``graph`` text: discrete nodes yellow, continuous green, target red."""
    names = list(f.names if names is None else names)
    if len(names) != f.n_nodes:
        raise ValueError("names do not align with the forest")
    lines = ["graph {", "  node [style=filled];"]
    for i, name in enumerate(names):
        role = "target" if i == target else ("discrete" if f.discrete[i] else "continuous")
        lines.append(f"  {_quote(name)} [fillcolor={_FILL[role]}];")
    for e in f.edges:
        attr = ""
        if weights:
            w = e.weight
            attr = f' [label="{w:.3g}"]' if math.isfinite(w) else ' [label="inf"]'
        lines.append(f"  {_quote(names[e.u])} -- {_quote(names[e.v])}{attr};")
    lines.append("}")
    return "\n".join(lines) + "\n"
