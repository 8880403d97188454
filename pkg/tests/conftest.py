import numpy as np
import pytest

from stoqtim.spectra import set_seed


@pytest.fixture(autouse=True)
def _deterministic():
    set_seed(0)
    np.random.seed(0)


def brute_distance(n, edges, u, v):
    """BFS distance, independent of the library's graph code."""
    adj = {i: set() for i in range(n)}
    for (a, b) in edges:
        adj[a].add(b)
        adj[b].add(a)
    frontier, seen, d = {u}, {u}, 0
    while frontier:
        if v in frontier:
            return d
        frontier = {x for w in frontier for x in adj[w]} - seen
        seen |= frontier
        d += 1
    return float("inf")

