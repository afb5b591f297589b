from graphlib import CycleError

import pytest

from esgame.utils.graphs import (
    ancestors,
    causal_depth,
    find_cycles,
    is_acyclic,
    topo_sort,
    transitive_reduction,
)


class TestFindCycles:
    def test_acyclic_graph(self):
        nodes = ["a", "b", "c"]
        edges = [("a", "b"), ("b", "c")]

        assert find_cycles(nodes, edges) == []
        assert is_acyclic(nodes, edges)

    def test_simple_cycle(self):
        nodes = ["a", "b", "c"]
        edges = [("a", "b"), ("b", "c"), ("c", "a")]

        assert find_cycles(nodes, edges) == [["a", "b", "c"]]
        assert not is_acyclic(nodes, edges)

    def test_self_loop(self):
        assert find_cycles(["a", "b"], [("a", "a"), ("a", "b")]) == [["a"]]

    def test_multiple_cycles(self):
        nodes = ["a", "b", "c", "d", "e"]
        edges = [("a", "b"), ("b", "a"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "d")]

        assert find_cycles(nodes, edges) == [["a", "b"], ["d", "e"]]


class TestAncestors:
    def test_strict_predecessors(self):
        result = ancestors(["a", "b", "c", "d"], [("a", "b"), ("b", "c")])

        assert result == {
            "a": frozenset(),
            "b": frozenset({"a"}),
            "c": frozenset({"a", "b"}),
            "d": frozenset(),
        }


class TestTransitiveReduction:
    def test_implied_edges_are_removed(self):
        edges = [("a", "b"), ("b", "c"), ("a", "c")]

        assert transitive_reduction(["a", "b", "c"], edges) == {("a", "b"), ("b", "c")}

    def test_diamond(self):
        edges = [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("a", "d")]

        assert transitive_reduction("abcd", edges) == {
            ("a", "b"),
            ("a", "c"),
            ("b", "d"),
            ("c", "d"),
        }

    def test_cycles_are_rejected(self):
        with pytest.raises(ValueError):
            transitive_reduction(["a", "b"], [("a", "b"), ("b", "a")])


class TestTopoSort:
    def test_dependencies_come_first(self):
        order = topo_sort({"c": ["b"], "b": ["a"], "a": []})

        assert order == ["a", "b", "c"]

    def test_cycle_raises(self):
        with pytest.raises(CycleError):
            topo_sort({"a": ["b"], "b": ["a"]})


class TestCausalDepth:
    def test_longest_chain(self):
        edges = [("a", "b"), ("b", "c"), ("a", "c"), ("d", "c")]

        assert causal_depth(["a", "b", "c", "d"], edges) == {"a": 0, "b": 1, "c": 2, "d": 0}

    def test_isolated_nodes(self):
        assert causal_depth(["x", "y"], []) == {"x": 0, "y": 0}
