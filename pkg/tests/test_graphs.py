import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from stoqtim.errors import ValidationError
from stoqtim.graphs import InteractionGraph, cycle_graph, grid_graph, path_graph

from conftest import brute_distance


def test_no_self_loops():
    with pytest.raises(ValidationError):
        InteractionGraph.build(3, [(1, 1)])


def test_path_distances():
    g = path_graph(5)
    assert g.distance(0, 4) == 4
    assert g.distance(2, 2) == 0
    assert g.degree(0) == 1 and g.degree(2) == 2


def test_disconnected_distance_infinite():
    g = InteractionGraph.build(4, [(0, 1), (2, 3)])
    assert g.distance(0, 3) == float("inf")


def test_triangle_detection():
    assert path_graph(4).is_triangle_free()
    assert cycle_graph(4).is_triangle_free()
    assert not cycle_graph(3).is_triangle_free()
    assert grid_graph(3, 3).is_triangle_free()


def test_set_distance_min_over_endpoints():
    g = path_graph(6)
    assert g.set_distance([0, 1], [4, 5]) == 3
    assert g.set_distance([0], [0]) == 0


@settings(max_examples=60, deadline=None)
@given(hst.integers(2, 8), hst.data())
def test_distance_matches_bfs_oracle(n, data):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = data.draw(hst.lists(hst.sampled_from(pairs), max_size=12, unique=True))
    g = InteractionGraph.build(n, edges)
    u = data.draw(hst.integers(0, n - 1))
    v = data.draw(hst.integers(0, n - 1))
    assert g.distance(u, v) == brute_distance(n, edges, u, v)
