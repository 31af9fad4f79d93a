"""Tree distances from a target node and the nested path-step subsets."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .forest import Forest


@dataclass(frozen=True)
class PathSteps:
    """Nested candidate sets around ``target``.

    ``distances[j]`` is the number of edges between ``target`` and ``j`` (None
    outside the target's tree).  ``steps[k - 1]`` holds every node at distance
    1..k, sorted by (distance, index).
    """

    target: int
    distances: tuple
    steps: tuple

    @property
    def max_distance(self) -> int:
        return len(self.steps)

    def __len__(self) -> int:
        return len(self.steps)

    def ring(self, k: int) -> list[int]:
        """Nodes at distance exactly ``k``."""
        return [j for j, d in enumerate(self.distances) if d == k]


def bfs_distances(f: Forest, source: int) -> list:
    dist = [None] * f.n_nodes
    dist[source] = 0
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for y in f.adjacency[x]:
            if dist[y] is None:
                dist[y] = dist[x] + 1
                queue.append(y)
    return dist


def path_steps(f: Forest, target: int) -> PathSteps:
    if not 0 <= target < f.n_nodes:
        raise IndexError(f"target {target} out of range")
    dist = bfs_distances(f, target)
    reach = sorted((d, j) for j, d in enumerate(dist) if d)
    max_d = reach[-1][0] if reach else 0
    steps = tuple(tuple(j for d, j in reach if d <= k) for k in range(1, max_d + 1))
    return PathSteps(target, tuple(dist), steps)


def mi_sum_profile(ps: PathSteps, raw_mi: np.ndarray) -> list[float]:
    """Cumulative ``sum_{X in w_k} I(Y, X)`` for each step, unpenalized.

    ``raw_mi`` is the p x p matrix from :meth:`MITable.raw`.
    """
    raw_mi = np.asarray(raw_mi)
    profile, total = [], 0.0
    for k in range(1, ps.max_distance + 1):
        total += float(sum(raw_mi[ps.target, j] for j in ps.ring(k)))
        profile.append(total)
    if any(b < a for a, b in zip(profile, profile[1:])):
        raise AssertionError(f"MI-sum profile is not monotone: {profile}")
    return profile
