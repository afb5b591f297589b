from collections.abc import Iterable, Mapping
from graphlib import TopologicalSorter

import networkx as nx

Node = str
Edge = tuple[Node, Node]


def _digraph(nodes: Iterable[Node], edges: Iterable[Edge]) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(sorted(nodes))
    graph.add_edges_from(sorted(edges))
    return graph


def find_cycles(nodes: Iterable[Node], edges: Iterable[Edge]) -> list[list[Node]]:
    """
    Return the causal cycles of a raw relation, each as a sorted node list.

    A cycle is a strongly connected component with more than one node, or a
    single node carrying a self-loop.
    """
    graph = _digraph(nodes, edges)
    loops = {u for u, _ in nx.selfloop_edges(graph)}
    cycles = [
        sorted(c)
        for c in nx.strongly_connected_components(graph)
        if len(c) > 1 or c & loops
    ]
    return sorted(cycles)


def ancestors(nodes: Iterable[Node], edges: Iterable[Edge]) -> dict[Node, frozenset[Node]]:
    """Strict predecessors of every node under the transitive closure of `edges`."""
    graph = _digraph(nodes, edges)
    return {n: frozenset(nx.ancestors(graph, n)) for n in graph.nodes}


def transitive_reduction(nodes: Iterable[Node], edges: Iterable[Edge]) -> frozenset[Edge]:
    """
    Immediate edges of the order generated by `edges`.

    Raises ValueError if the relation has a cycle.
    """
    graph = _digraph(nodes, edges)
    if not nx.is_directed_acyclic_graph(graph):
        raise ValueError("Cannot reduce a cyclic relation")
    return frozenset(nx.transitive_reduction(graph).edges)


def is_acyclic(nodes: Iterable, edges: Iterable[tuple]) -> bool:
    graph = nx.DiGraph()
    graph.add_nodes_from(nodes)
    graph.add_edges_from(edges)
    return nx.is_directed_acyclic_graph(graph)


def topo_sort(dep_map: Mapping[Node, Iterable[Node]]) -> list[Node]:
    """
    Return a dependencies-first topological order.
    Raises graphlib.CycleError if dep_map has a cycle.
    """
    return list(TopologicalSorter(dep_map).static_order())


def causal_depth(nodes: Iterable[Node], edges: Iterable[Edge]) -> dict[Node, int]:
    """Length of the longest causal chain ending at each node."""
    node_list = sorted(nodes)
    preds: dict[Node, set[Node]] = {n: set() for n in node_list}
    for u, v in edges:
        preds[v].add(u)
    depth: dict[Node, int] = {}
    for n in topo_sort(preds):
        depth[n] = max((depth[p] + 1 for p in preds[n]), default=0)
    return depth
