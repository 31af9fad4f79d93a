import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.sparse.csgraph import minimum_spanning_tree

from bestpath.forest import (
    Edge, Forest, UnionFind, build_forest, components, export_dot, forbidden_paths,
    max_weight_forest, tree_path,
)
from bestpath.mi import mi_matrix
from oracles import best_forest_weight, has_forbidden_path


def _sym(p, entries):
    w = np.full((p, p), -np.inf)
    for (u, v), x in entries.items():
        w[u, v] = w[v, u] = x
    return w


def _forest(names, discrete, pairs):
    return Forest(tuple(names), tuple(discrete),
                  tuple(Edge(u, v, 1.0, 1.0) for u, v in pairs))


class TestUnionFind:
    def test_discrete_flag_propagates(self):
        uf = UnionFind([True, False, False])
        uf.union(1, 2)
        assert not uf.has_discrete[uf.find(1)]
        uf.union(0, 2)
        assert uf.has_discrete[uf.find(1)]
        assert uf.find(0) == uf.find(1) == uf.find(2)


class TestMaxWeightForest:
    def test_single_positive_edge(self):
        assert max_weight_forest(_sym(2, {(0, 1): 0.5}), [False, False]) == [(0, 1)]

    def test_non_positive_weights_ignored(self):
        assert max_weight_forest(_sym(2, {(0, 1): 0.0}), [False, False]) == []

    def test_forbidden_join_rejected(self):
        # D1=0, C=1, D2=2
        w = _sym(3, {(0, 1): 5, (1, 2): 4, (0, 2): 3})
        assert max_weight_forest(w, [True, False, True]) == [(0, 1), (0, 2)]

    def test_infinite_weights_ordered_by_raw(self):
        w = _sym(3, {(0, 1): math.inf, (1, 2): math.inf, (0, 2): 1.0})
        raw = _sym(3, {(0, 1): 5.0, (1, 2): 9.0, (0, 2): 2.0})
        assert max_weight_forest(w, [False] * 3, raw) == [(1, 2), (0, 1)]

    def test_matches_plain_kruskal_all_continuous(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = int(rng.integers(3, 9))
            w = rng.uniform(-1, 3, size=(p, p))
            w = np.triu(w, 1)
            w = w + w.T
            np.fill_diagonal(w, -np.inf)
            ours = sum(w[u, v] for u, v in max_weight_forest(w, [False] * p))
            pos = np.where(w > 0, -w, 0.0)
            np.fill_diagonal(pos, 0.0)
            ref = -minimum_spanning_tree(np.triu(pos)).sum()
            assert ours == pytest.approx(ref, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000), st.integers(2, 5))
    def test_optimal_and_forbidden_path_free(self, seed, p):
        rng = np.random.default_rng(seed)
        discrete = [bool(x) for x in rng.integers(0, 2, p)]
        w = np.triu(rng.uniform(-1, 4, size=(p, p)), 1)
        w = w + w.T
        np.fill_diagonal(w, -np.inf)
        chosen = max_weight_forest(w, discrete)
        assert not has_forbidden_path(p, chosen, discrete)
        total = sum(w[u, v] for u, v in chosen)
        assert total == pytest.approx(best_forest_weight(w.tolist(), discrete), abs=1e-12)


class TestForestQueries:
    def test_components_of_empty_graph(self):
        f = _forest("abc", [False] * 3, [])
        assert components(f) == [[0], [1], [2]]

    def test_random_tree_single_component(self):
        f = _forest("abcdef", [False] * 6, [(0, 3), (3, 1), (1, 5), (2, 5), (4, 3)])
        assert components(f) == [list(range(6))]

    def test_tree_path(self):
        f = _forest("abcd", [False] * 4, [(0, 1), (1, 2)])
        assert tree_path(f, 0, 2) == [0, 1, 2]
        assert tree_path(f, 0, 3) is None

    def test_forbidden_paths_found(self):
        f = _forest("abc", [True, False, True], [(0, 1), (1, 2)])
        assert forbidden_paths(f) == [(0, 2)]

    def test_to_dict_schema(self):
        f = _forest(["x", "g"], [False, True], [(0, 1)])
        d = f.to_dict()
        assert d["nodes"] == [{"name": "x", "kind": "continuous"}, {"name": "g", "kind": "discrete"}]
        assert set(d["edges"][0]) == {"u", "v", "i", "penalized"}


class TestHittersForest:
    def test_structure(self, hitters):
        f = build_forest(mi_matrix(hitters), "bic")
        comps = components(f)
        div = hitters.index("Division")
        assert [div] in comps
        sal = hitters.index("Salary")
        assert len(f.component_of(sal)) == 19
        assert (min(sal, hitters.index("CRBI")), max(sal, hitters.index("CRBI"))) in f.edge_set()
        assert forbidden_paths(f) == []


class TestExportDot:
    def test_single_node(self):
        text = export_dot(_forest(["X", "Y"], [False, False], []))
        assert text.startswith("graph {") and text.rstrip().endswith("}")
        assert '"X" [fillcolor=green];' in text

    def test_one_edge(self):
        text = export_dot(_forest(["X", "Z"], [False, True], [(0, 1)]), target=0)
        assert text.count("--") == 1
        assert '"X" [fillcolor=red];' in text and '"Z" [fillcolor=yellow];' in text

    def test_hitters_edge_count(self, hitters):
        f = build_forest(mi_matrix(hitters), "bic")
        text = export_dot(f, target=hitters.index("Salary"))
        assert text.count(" -- ") == len(f.edges) == 18

    def test_quoting(self):
        text = export_dot(_forest(['a "b"', "c"], [False, False], [(0, 1)]))
        assert '"a \\"b\\"" -- "c";' in text
