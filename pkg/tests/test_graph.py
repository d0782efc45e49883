"""
Tests for mdrsp.graph: capacity graphs, components and minimum s-t cuts.
"""

from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdrsp.graph import CapGraph, connected_components, min_st_cut


def brute_force_cut(g: CapGraph, s, t) -> float:
    others = [v for v in g.vertices if v not in (s, t)]
    best = float('inf')
    for size in range(len(others) + 1):
        for chosen in combinations(others, size):
            best = min(best, g.cut_capacity({s, *chosen}))
    return best


@st.composite
def capacity_graphs(draw):
    n = draw(st.integers(min_value=2, max_value=9))
    g = CapGraph(range(n))
    for u, v in combinations(range(n), 2):
        if draw(st.booleans()):
            g.add_edge(u, v, draw(st.sampled_from([0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 0.125, 0.75])))
    return g


class TestCapGraph:
    """graph construction"""

    def test_parallel_edges_merge(self):
        g = CapGraph([0, 1])
        g.add_edge(0, 1, 0.5)
        g.add_edge(1, 0, 0.25)
        assert g.capacity(0, 1) == pytest.approx(0.75)
        assert g.capacity(1, 0) == pytest.approx(0.75)

    def test_large_edge_capacity(self):
        g = CapGraph([0, 1, 2])
        g.add_edge(0, 1, 0.5)
        g.add_edge(1, 2, 1.5)
        g.add_large_edge(0, 2)
        assert g.large_capacity() == pytest.approx(3.0)
        assert g.capacity(0, 2) == pytest.approx(3.0)

    def test_invalid_edges(self):
        g = CapGraph()
        with pytest.raises(ValueError, match='negative'):
            g.add_edge(0, 1, -1.0)
        with pytest.raises(ValueError, match='self-loop'):
            g.add_edge(2, 2, 1.0)

    def test_mixed_vertex_labels_sort(self):
        g = CapGraph([3, 'depots', 1])
        assert g.vertices == [1, 3, 'depots']

    def test_cut_capacity(self):
        g = CapGraph(range(4))
        g.add_edge(0, 1, 1.0)
        g.add_edge(1, 2, 0.5)
        g.add_edge(2, 3, 2.0)
        assert g.cut_capacity({0, 1}) == pytest.approx(0.5)


class TestComponents:
    """connected components"""

    def test_zero_capacity_edges_do_not_connect(self):
        g = CapGraph(range(5))
        g.add_edge(0, 1, 0.5)
        g.add_edge(1, 2, 0.0)
        g.add_edge(3, 4, 1.0)
        assert connected_components(g) == [{0, 1}, {2}, {3, 4}]


class TestMinCut:
    """minimum s-t cuts"""

    def test_path(self):
        g = CapGraph(range(4))
        g.add_edge(0, 1, 2.0)
        g.add_edge(1, 2, 0.5)
        g.add_edge(2, 3, 1.0)
        result = min_st_cut(g, 0, 3)
        assert result.value == pytest.approx(0.5)
        assert result.source_side == frozenset({0, 1})

    def test_minimal_source_side(self):
        # both {0} and {0, 1} are minimum cuts; the minimal side is {0}
        g = CapGraph(range(3))
        g.add_edge(0, 1, 1.0)
        g.add_edge(1, 2, 1.0)
        assert min_st_cut(g, 0, 2).source_side == frozenset({0})

    def test_disconnected_terminals(self):
        g = CapGraph(['source', 'sink', 1])
        g.add_edge('source', 1, 1.0)
        result = min_st_cut(g, 'source', 'sink')
        assert result.value == 0.0
        assert result.source_side == frozenset({'source', 1})

    def test_large_edges_are_never_cut(self):
        g = CapGraph(range(3))
        g.add_edge(0, 1, 0.1)
        g.add_edge(1, 2, 5.0)
        g.add_large_edge(0, 1)
        result = min_st_cut(g, 0, 2)
        assert result.value == pytest.approx(5.0)
        assert result.source_side == frozenset({0, 1})

    def test_bad_terminals(self):
        g = CapGraph([0, 1])
        with pytest.raises(ValueError, match='differ'):
            min_st_cut(g, 0, 0)
        with pytest.raises(ValueError, match='missing'):
            min_st_cut(g, 0, 7)

    @settings(max_examples=200, deadline=None)
    @given(capacity_graphs())
    def test_matches_brute_force(self, g):
        s, t = g.vertices[0], g.vertices[-1]
        result = min_st_cut(g, s, t)
        assert result.value == pytest.approx(brute_force_cut(g, s, t), abs=1e-9)
        assert s in result.source_side and t not in result.source_side
        assert g.cut_capacity(result.source_side) == pytest.approx(result.value, abs=1e-9)
