"""Interaction graphs: node/edge structure shared by every model class.

Nodes are integers 0..n-1. Edges are unordered pairs of distinct nodes.
Graph distances are computed by BFS and memoized per source node; all
reductions that extend a graph keep the original node indices and append
new nodes at the end, so encodings stay index-stable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .errors import ValidationError

INF = float("inf")

# Memoized all-pairs tables are only kept below this node count.
_MEMO_LIMIT = 4096


def _canon_edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class InteractionGraph:
    """Undirected simple graph with optional opaque node labels."""

    node_count: int
    edges: frozenset[tuple[int, int]]
    node_labels: tuple[Optional[str], ...] = ()
    _dist_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.node_count <= 0:
            raise ValidationError("graph must have at least one node")
        for (u, v) in self.edges:
            if u == v:
                raise ValidationError(f"self-loop at node {u}")
            if not (0 <= u < self.node_count and 0 <= v < self.node_count):
                raise ValidationError(f"edge ({u},{v}) out of range for n={self.node_count}")
            if u > v:
                raise ValidationError(f"edge ({u},{v}) not canonical (expected u < v)")
        if self.node_labels and len(self.node_labels) != self.node_count:
            raise ValidationError("node_labels length must match node_count")

    @staticmethod
    def build(n: int, edges: Iterable[tuple[int, int]],
              labels: Optional[Iterable[Optional[str]]] = None) -> "InteractionGraph":
        es = frozenset(_canon_edge(u, v) for (u, v) in edges)
        return InteractionGraph(n, es, tuple(labels) if labels is not None else ())

    @property
    def n(self) -> int:
        return self.node_count

    @property
    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return _canon_edge(u, v) in self.edges

    def neighbors(self, u: int) -> list[int]:
        adj = self._adjacency()
        return adj[u]

    def degree(self, u: int) -> int:
        return len(self._adjacency()[u])

    def max_degree(self) -> int:
        return max((len(a) for a in self._adjacency()), default=0)

    def _adjacency(self) -> list[list[int]]:
        adj = self._dist_cache.get("_adj")
        if adj is None:
            adj = [[] for _ in range(self.node_count)]
            for (u, v) in sorted(self.edges):
                adj[u].append(v)
                adj[v].append(u)
            self._dist_cache["_adj"] = adj
        return adj

    def distances_from(self, u: int) -> list[float]:
        """BFS distances from u; INF for unreachable nodes. Memoized for n <= 4096."""
        cached = self._dist_cache.get(u)
        if cached is not None:
            return cached
        adj = self._adjacency()
        dist = [INF] * self.node_count
        dist[u] = 0
        q = deque([u])
        while q:
            w = q.popleft()
            for x in adj[w]:
                if dist[x] is INF:
                    dist[x] = dist[w] + 1
                    q.append(x)
        if self.node_count <= _MEMO_LIMIT:
            self._dist_cache[u] = dist
        return dist

    def distance(self, u: int, v: int) -> float:
        return self.distances_from(u)[v]

    def set_distance(self, a: Iterable[int], b: Iterable[int]) -> float:
        """Minimum graph distance over pairs of endpoints (min-over-endpoints rule)."""
        bs = list(b)
        best = INF
        for u in a:
            du = self.distances_from(u)
            for v in bs:
                if du[v] < best:
                    best = du[v]
        return best

    def is_triangle_free(self) -> bool:
        adj = [set(a) for a in self._adjacency()]
        for (u, v) in self.edges:
            if adj[u] & adj[v]:
                return False
        return True

    def relabeled(self, labels: Iterable[Optional[str]]) -> "InteractionGraph":
        return InteractionGraph(self.node_count, self.edges, tuple(labels))


def path_graph(n: int) -> InteractionGraph:
    return InteractionGraph.build(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n: int) -> InteractionGraph:
    return InteractionGraph.build(n, [(i, (i + 1) % n) for i in range(n)])


def complete_graph(n: int) -> InteractionGraph:
    return InteractionGraph.build(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def grid_graph(rows: int, cols: int) -> InteractionGraph:
    """Square grid, node (r, c) -> r*cols + c."""
    edges = []
    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                edges.append((r * cols + c, r * cols + c + 1))
            if r + 1 < rows:
                edges.append((r * cols + c, (r + 1) * cols + c))
    return InteractionGraph.build(rows * cols, edges)
