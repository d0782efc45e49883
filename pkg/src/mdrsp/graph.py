"""
Capacitated undirected graphs: components and exact minimum s-t cuts.

Flows run on networkx with capacities scaled to integers, so the residual
graph has no floating-point crumbs and the source side found by reachability
is the true minimal one.  Cut values are then re-evaluated on the original
real capacities.
"""

from dataclasses import dataclass
from typing import Hashable, Iterable

import networkx as nx
from networkx.algorithms.flow import edmonds_karp

CAPACITY_SCALE = 2 ** 40


def _vertex_key(vertex) -> tuple:
    if isinstance(vertex, int):
        return (0, vertex, '')
    return (1, 0, str(vertex))


class CapGraph:
    """
    Undirected graph with nonnegative edge capacities.

    Parallel edges are merged by adding their capacities.  Edges added with
    ``add_large_edge`` get capacity ``1 + sum of all finite capacities`` at cut
    time, which no minimum cut can afford to cross.
    """

    def __init__(self, vertices: Iterable[Hashable] = ()):
        self._graph = nx.Graph()
        self._graph.add_nodes_from(vertices)

    def add_vertex(self, vertex: Hashable) -> None:
        """add an isolated vertex (no-op when present)"""
        self._graph.add_node(vertex)

    def add_edge(self, u: Hashable, v: Hashable, capacity: float) -> None:
        """add capacity to edge (u, v), creating it if needed"""
        if capacity < 0:
            raise ValueError(f'negative capacity {capacity} on ({u}, {v})')
        if u == v:
            raise ValueError(f'self-loop on {u}')
        if self._graph.has_edge(u, v):
            self._graph[u][v]['capacity'] += float(capacity)
        else:
            self._graph.add_edge(u, v, capacity=float(capacity), large=False)

    def add_large_edge(self, u: Hashable, v: Hashable) -> None:
        """add an edge that can never sit in a minimum cut"""
        if self._graph.has_edge(u, v):
            self._graph[u][v]['large'] = True
        else:
            self._graph.add_edge(u, v, capacity=0.0, large=True)

    @property
    def vertices(self) -> list:
        """vertices in deterministic order"""
        return sorted(self._graph.nodes, key=_vertex_key)

    def edges(self) -> list[tuple]:
        """(u, v, capacity) triples with large edges reported at their resolved capacity"""
        big = self.large_capacity()
        return [(u, v, big if data['large'] else data['capacity'])
                for u, v, data in self._graph.edges(data=True)]

    def has_vertex(self, vertex: Hashable) -> bool:
        """True when ``vertex`` is present"""
        return vertex in self._graph

    def capacity(self, u: Hashable, v: Hashable) -> float:
        """capacity of (u, v), 0 when absent"""
        if not self._graph.has_edge(u, v):
            return 0.0
        data = self._graph[u][v]
        return self.large_capacity() if data['large'] else data['capacity']

    def large_capacity(self) -> float:
        """1 + the sum of all finite capacities"""
        return 1.0 + sum(data['capacity'] for _, _, data in self._graph.edges(data=True) if not data['large'])

    def cut_capacity(self, side: Iterable[Hashable]) -> float:
        """total capacity of the edges leaving ``side``"""
        side = set(side)
        return sum(capacity for u, v, capacity in self.edges() if (u in side) != (v in side))


def connected_components(g: CapGraph) -> list[set]:
    """components over the edges with positive capacity, ordered by smallest vertex"""
    support = nx.Graph()
    support.add_nodes_from(g.vertices)
    support.add_edges_from((u, v) for u, v, capacity in g.edges() if capacity > 0)
    components = [set(component) for component in nx.connected_components(support)]
    return sorted(components, key=lambda component: min(_vertex_key(v) for v in component))


@dataclass(frozen=True)
class CutResult:
    """a minimum s-t cut: its value and the minimal source side"""
    value: float
    source_side: frozenset


def min_st_cut(g: CapGraph, s: Hashable, t: Hashable) -> CutResult:
    """
    Minimum s-t cut.

    The source side is the set reachable from ``s`` in the residual graph of
    a maximum flow, i.e. the minimal source side among all minimum cuts.
    Disconnected s and t give value 0.

    :raises ValueError: if s == t or either is missing
    """
    if s == t:
        raise ValueError('source and sink must differ')
    if not g.has_vertex(s) or not g.has_vertex(t):
        raise ValueError(f'missing terminal {s if not g.has_vertex(s) else t}')

    scaled = nx.Graph()
    scaled.add_nodes_from(g.vertices)
    for u, v, capacity in g.edges():
        units = int(round(capacity * CAPACITY_SCALE))
        if units > 0:
            scaled.add_edge(u, v, capacity=units)

    residual = edmonds_karp(scaled, s, t, capacity='capacity')
    reachable = {s}
    frontier = [s]
    while frontier:
        vertex = frontier.pop()
        for neighbour, data in residual[vertex].items():
            if neighbour not in reachable and data['capacity'] - data['flow'] > 0:
                reachable.add(neighbour)
                frontier.append(neighbour)

    return CutResult(value=g.cut_capacity(reachable), source_side=frozenset(reachable))
