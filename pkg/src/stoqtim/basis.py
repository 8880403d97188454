"""Basis-space enumeration for particle sectors and qubit registers.

Configurations are node-subset bitmasks with node 0 as the least-significant
bit; enumeration order is ascending by bitmask integer, which makes every
basis canonical and reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

from .errors import EmptySectorError, ScaleInfeasibleError, ValidationError
from .graphs import InteractionGraph
from .models import (HcbHamiltonian, HcdHamiltonian, ModelHamiltonian,
                     StoqLhHamiltonian, TimHamiltonian)

# Desk-scale guard: refuse to materialize larger bases.
DEFAULT_DIMENSION_CAP = 2_000_000


@dataclass(frozen=True)
class BasisSpace:
    """Ordered, index-addressable list of admissible configurations."""

    mode: str
    node_count: int
    configurations: tuple[int, ...]
    index_of: dict[int, int]

    @staticmethod
    def from_configs(mode: str, node_count: int, configs: Iterable[int],
                     cap: Optional[int] = DEFAULT_DIMENSION_CAP) -> "BasisSpace":
        ordered = tuple(sorted(configs))
        if cap is not None and len(ordered) > cap:
            raise ScaleInfeasibleError(
                f"basis of dimension {len(ordered)} exceeds cap {cap}")
        if not ordered:
            raise EmptySectorError(f"no configuration satisfies the {mode} constraints")
        return BasisSpace(mode, node_count, ordered,
                          {c: i for i, c in enumerate(ordered)})

    @property
    def dimension(self) -> int:
        return len(self.configurations)

    def __len__(self) -> int:
        return len(self.configurations)

    def __contains__(self, mask: int) -> bool:
        return mask in self.index_of


def _mask(nodes: Iterable[int]) -> int:
    m = 0
    for u in nodes:
        m |= 1 << u
    return m


def mask_nodes(mask: int) -> list[int]:
    out = []
    u = 0
    while mask:
        if mask & 1:
            out.append(u)
        mask >>= 1
        u += 1
    return out


def is_m_dimer(nodes: Iterable[int], graph: InteractionGraph) -> bool:
    """True iff the node set is a disjoint union of dimers pairwise at distance >= 3.

    The decomposition is by connected components: when the separation rule
    holds, each component is a single edge, so the greedy split is valid.
    Total predicate; the empty set is the 0-dimer.
    """
    S = set(nodes)
    if not S:
        return True
    if len(S) % 2 == 1:
        return False
    # Split S into connected components of the induced subgraph.
    comps: list[list[int]] = []
    seen: set[int] = set()
    for u in sorted(S):
        if u in seen:
            continue
        comp = [u]
        seen.add(u)
        stack = [u]
        while stack:
            w = stack.pop()
            for x in graph.neighbors(w):
                if x in S and x not in seen:
                    seen.add(x)
                    comp.append(x)
                    stack.append(x)
        comps.append(comp)
    for comp in comps:
        if len(comp) != 2 or not graph.has_edge(comp[0], comp[1]):
            return False
    for i in range(len(comps)):
        for j in range(i + 1, len(comps)):
            if graph.set_distance(comps[i], comps[j]) < 3:
                return False
    return True


def enumerate_sparse_subsets(graph: InteractionGraph, m: int, r: int,
                             cap: Optional[int] = DEFAULT_DIMENSION_CAP) -> BasisSpace:
    """All m-node subsets with pairwise graph distance >= r, as bitmasks."""
    n = graph.node_count
    if m > n:
        raise EmptySectorError(f"cannot place {m} particles on {n} nodes")
    configs: list[int] = []
    chosen: list[int] = []

    def extend(start: int):
        if cap is not None and len(configs) > cap:
            raise ScaleInfeasibleError(f"sector dimension exceeds cap {cap}")
        if len(chosen) == m:
            configs.append(_mask(chosen))
            return
        for u in range(start, n - (m - len(chosen)) + 1):
            if r >= 2 and any(graph.distance(u, v) < r for v in chosen):
                continue
            chosen.append(u)
            extend(u + 1)
            chosen.pop()

    extend(0)
    mode = "m-particle" if r <= 1 else "(m,r)-sparse"
    return BasisSpace.from_configs(mode, n, configs, cap)


def enumerate_dimer_subsets(graph: InteractionGraph, m: int,
                            cap: Optional[int] = DEFAULT_DIMENSION_CAP) -> BasisSpace:
    """All m-dimer configurations (unions of m edges pairwise at distance >= 3).

    Each admissible node set has a unique decomposition into dimers (the
    connected components), so enumerating edge m-subsets with the separation
    constraint visits every configuration exactly once.
    """
    if not graph.is_triangle_free():
        raise ValidationError("m-dimer enumeration requires a triangle-free graph")
    edges = graph.edge_list
    configs: list[int] = []
    chosen: list[tuple[int, int]] = []

    def compatible(e: tuple[int, int]) -> bool:
        return all(graph.set_distance(e, f) >= 3 for f in chosen)

    def extend(start: int):
        if cap is not None and len(configs) > cap:
            raise ScaleInfeasibleError(f"sector dimension exceeds cap {cap}")
        if len(chosen) == m:
            configs.append(_mask(itertools.chain.from_iterable(chosen)))
            return
        for i in range(start, len(edges) - (m - len(chosen)) + 1):
            if compatible(edges[i]):
                chosen.append(edges[i])
                extend(i + 1)
                chosen.pop()

    extend(0)
    return BasisSpace.from_configs("m-dimer", graph.node_count, configs, cap)


def enumerate_qubit_register(n: int, cap: Optional[int] = DEFAULT_DIMENSION_CAP) -> BasisSpace:
    if cap is not None and (1 << n) > cap:
        raise ScaleInfeasibleError(f"2^{n} basis states exceed cap {cap}")
    return BasisSpace("qubit-register", n, tuple(range(1 << n)),
                      {c: c for c in range(1 << n)})


def enumerate_filtered(base: BasisSpace, predicate: Callable[[int], bool],
                       mode: Optional[str] = None) -> BasisSpace:
    """Sub-basis of configurations passing a predicate (sector restrictions)."""
    configs = [c for c in base.configurations if predicate(c)]
    return BasisSpace.from_configs(mode or base.mode, base.node_count, configs, cap=None)


def enumerate_particle_window(graph: InteractionGraph, sizes: Iterable[int],
                              cap: Optional[int] = DEFAULT_DIMENSION_CAP) -> BasisSpace:
    """All subsets whose cardinality lies in ``sizes`` (no sparsity constraint)."""
    n = graph.node_count
    configs: list[int] = []
    for m in sorted(set(sizes)):
        if 0 <= m <= n:
            for combo in itertools.combinations(range(n), m):
                configs.append(_mask(combo))
        if cap is not None and len(configs) > cap:
            raise ScaleInfeasibleError(f"sector dimension exceeds cap {cap}")
    return BasisSpace.from_configs("particle-window", n, configs, cap)


def enumerate_basis(model: ModelHamiltonian,
                    cap: Optional[int] = DEFAULT_DIMENSION_CAP) -> BasisSpace:
    """The model's own Hilbert-space sector, in canonical order."""
    if isinstance(model, (TimHamiltonian,)):
        return enumerate_qubit_register(model.n, cap)
    if isinstance(model, StoqLhHamiltonian):
        return enumerate_qubit_register(model.n, cap)
    if isinstance(model, HcbHamiltonian):
        return enumerate_sparse_subsets(model.graph, model.particle_count, model.range_, cap)
    if isinstance(model, HcdHamiltonian):
        return enumerate_dimer_subsets(model.graph, model.dimer_count, cap)
    raise ValidationError(f"unknown model {type(model).__name__}")
