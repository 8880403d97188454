"""Encoding isometries between target and simulator basis spaces.

Two kinds: a basis-to-basis injection (every reduction except the degree-3
step) and a tensor-of-chain-states map (the degree-3 step).  Encodings can be
composed and materialized as dense matrices for desk-scale verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Optional, Sequence

import numpy as np

from .errors import ScaleInfeasibleError, ValidationError

CHAIN_DENSE_LIMIT = 1 << 14


@dataclass(frozen=True)
class Encoding:
    """Isometry from a target basis space into a simulator basis space."""

    kind: str  # "basis-map" | "chain-tensor" | "composite"
    target_dimension: int
    simulator_dimension: int
    # basis-map: simulator index for each target index
    basis_map: Optional[tuple[int, ...]] = None
    # chain-tensor: per-logical-qubit (psi0, psi1) chain ground states,
    # chains ordered by logical qubit; qubit (u, i) is global bit u*m + i.
    chain_states: Optional[tuple[tuple[np.ndarray, np.ndarray], ...]] = None
    parts: Optional[tuple["Encoding", ...]] = None

    def __post_init__(self):
        if self.kind == "basis-map":
            bm = tuple(int(i) for i in self.basis_map)
            if len(bm) != self.target_dimension:
                raise ValidationError("basis map length must equal target dimension")
            if len(set(bm)) != len(bm):
                raise ValidationError("basis map must be injective")
            if any(not 0 <= i < self.simulator_dimension for i in bm):
                raise ValidationError("basis map index out of range")
            object.__setattr__(self, "basis_map", bm)
        elif self.kind == "chain-tensor":
            if not self.chain_states:
                raise ValidationError("chain-tensor encoding needs chain states")
        elif self.kind == "composite":
            if not self.parts or len(self.parts) < 2:
                raise ValidationError("composite encoding needs at least two parts")
        else:
            raise ValidationError(f"unknown encoding kind {self.kind!r}")

    @staticmethod
    def identity(dimension: int) -> "Encoding":
        return Encoding("basis-map", dimension, dimension, tuple(range(dimension)))

    @staticmethod
    def from_map(basis_map: Sequence[int], simulator_dimension: int) -> "Encoding":
        return Encoding("basis-map", len(basis_map), simulator_dimension, tuple(basis_map))

    @staticmethod
    def from_chains(chain_states) -> "Encoding":
        states = tuple((np.asarray(a, float), np.asarray(b, float)) for a, b in chain_states)
        tdim = 1 << len(states)
        sdim = 1
        for (a, _) in states:
            sdim *= a.shape[0]
        return Encoding("chain-tensor", tdim, sdim, chain_states=states)

    def is_basis_to_basis(self) -> bool:
        if self.kind == "basis-map":
            return True
        if self.kind == "composite":
            return all(p.is_basis_to_basis() for p in self.parts)
        return False

    def apply_index(self, i: int) -> int:
        """Image of a target basis index (basis-to-basis encodings only)."""
        if self.kind == "basis-map":
            return self.basis_map[i]
        if self.kind == "composite" and self.is_basis_to_basis():
            for p in self.parts:
                i = p.apply_index(i)
            return i
        raise ValidationError("index mapping is only defined for basis-to-basis encodings")

    def compose(self, outer: "Encoding") -> "Encoding":
        """Encoding for outer . self (self applied first, then outer)."""
        if outer.target_dimension != self.simulator_dimension:
            raise ValidationError("encoding dimensions do not chain")
        if self.kind == "basis-map" and outer.kind == "basis-map":
            return Encoding.from_map(tuple(outer.basis_map[i] for i in self.basis_map),
                                     outer.simulator_dimension)
        parts: list[Encoding] = []
        for enc in (self, outer):
            parts.extend(enc.parts if enc.kind == "composite" else (enc,))
        return Encoding("composite", self.target_dimension,
                        outer.simulator_dimension, parts=tuple(parts))

    def to_matrix(self) -> np.ndarray:
        """Dense (simulator_dimension x target_dimension) isometry."""
        if self.simulator_dimension * self.target_dimension > CHAIN_DENSE_LIMIT ** 2:
            raise ScaleInfeasibleError("encoding too large to materialize densely")
        if self.kind == "basis-map":
            E = np.zeros((self.simulator_dimension, self.target_dimension))
            E[np.asarray(self.basis_map), np.arange(self.target_dimension)] = 1.0
            return E
        if self.kind == "chain-tensor":
            n = len(self.chain_states)
            cols = []
            inv_sqrt2 = 1.0 / np.sqrt(2.0)
            logical = []
            for (psi0, psi1) in self.chain_states:
                logical.append(((psi0 + psi1) * inv_sqrt2, (psi0 - psi1) * inv_sqrt2))
            for x in range(1 << n):
                # chain 0 occupies the least-significant block of bits
                vecs = [logical[u][(x >> u) & 1] for u in range(n)]
                cols.append(reduce(np.kron, reversed(vecs)))
            return np.column_stack(cols)
        mats = [p.to_matrix() for p in self.parts]
        out = mats[0]
        for M in mats[1:]:
            out = M @ out
        return out
