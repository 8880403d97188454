"""Sparse-operator assembly in enumerated bases.

``build_matrix`` projects every hopping term onto the admissible sector:
moves whose endpoint configuration is not in the basis contribute zero, which
is exactly the projected-hopping convention of the particle models.  The
returned operator includes the model's scalar ``energy_shift`` on the
diagonal, so spectra of different models are directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import BasisSpace, mask_nodes
from .errors import ValidationError
from .models import (HcbHamiltonian, HcdHamiltonian, ModelHamiltonian,
                     StoqLhHamiltonian, TimHamiltonian)

STOQUASTIC_TOL = 1e-12


@dataclass(frozen=True)
class SparseOperator:
    """Real symmetric operator in a fixed basis (CSR storage)."""

    matrix: sp.csr_matrix
    basis: Optional[BasisSpace] = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_symmetric(self) -> bool:
        return (self.matrix != self.matrix.T).nnz == 0

    def is_stoquastic(self, tol: float = STOQUASTIC_TOL) -> bool:
        return check_stoquastic(self, tol)

    def restrict(self, indices) -> "SparseOperator":
        idx = np.asarray(indices, dtype=int)
        return SparseOperator(self.matrix[np.ix_(idx, idx)].tocsr())

    def norm_estimate(self) -> float:
        """Spectral norm (dense for small operators, Lanczos above)."""
        d = self.dimension
        if d == 0:
            return 0.0
        if d == 1:
            return abs(self.matrix[0, 0])
        if d <= 512:
            return float(np.abs(np.linalg.eigvalsh(self.to_dense())).max())
        lo = spla.eigsh(self.matrix, k=1, which="SA", return_eigenvectors=False)
        hi = spla.eigsh(self.matrix, k=1, which="LA", return_eigenvectors=False)
        return float(max(abs(lo[0]), abs(hi[0])))

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator((self.matrix + other.matrix).tocsr(), self.basis)

    def scaled(self, a: float) -> "SparseOperator":
        return SparseOperator((a * self.matrix).tocsr(), self.basis)


def check_stoquastic(op: SparseOperator, tol: float = STOQUASTIC_TOL) -> bool:
    """True iff every off-diagonal entry is <= +tol."""
    coo = op.matrix.tocoo()
    off = coo.row != coo.col
    return bool(np.all(coo.data[off] <= tol)) if off.any() else True


class _Builder:
    def __init__(self, basis: BasisSpace):
        self.basis = basis
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.diag = np.zeros(basis.dimension)

    def add_offdiag(self, i: int, j: int, v: float):
        self.rows.append(i)
        self.cols.append(j)
        self.vals.append(v)

    def finish(self) -> SparseOperator:
        d = self.basis.dimension
        mat = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(d, d)).tocsr()
        mat = (mat + sp.diags(self.diag)).tocsr()
        mat.sum_duplicates()
        return SparseOperator(mat, self.basis)


def _build_particle(model, basis: BasisSpace) -> SparseOperator:
    b = _Builder(basis)
    chem = model.chemical
    pair = model.pair_potential
    projs = getattr(model, "projector_terms", ())
    proj_masks = [(sum(1 << u for u in S), p) for (S, p) in projs]
    for i, s in enumerate(basis.configurations):
        d = model.energy_shift
        nodes = mask_nodes(s)
        for u in nodes:
            d += chem.get(u, 0.0)
        for a in range(len(nodes)):
            for c in range(a + 1, len(nodes)):
                d += pair.get((nodes[a], nodes[c]), 0.0)
        for (mask, p) in proj_masks:
            if s & mask == 0:
                d -= p
        b.diag[i] = d
    if isinstance(model, HcdHamiltonian):
        t = model.hopping
        if t != 0.0:
            n = basis.node_count
            for i, s in enumerate(basis.configurations):
                for u in range(n):
                    if not (s >> u) & 1:
                        continue
                    for v in range(n):  # all node pairs, not only edges
                        if u == v or (s >> v) & 1:
                            continue
                        s2 = (s & ~(1 << u)) | (1 << v)
                        j = basis.index_of.get(s2)
                        if j is not None:
                            b.add_offdiag(j, i, -t)
    else:
        for (u, v), t in model.hopping.items():
            bu, bv = 1 << u, 1 << v
            for i, s in enumerate(basis.configurations):
                if ((s >> u) & 1) == ((s >> v) & 1):
                    continue
                j = basis.index_of.get(s ^ bu ^ bv)
                if j is not None:
                    b.add_offdiag(j, i, -t)
        for (c, (u, v)), t in model.controlled_hopping.items():
            bu, bv = 1 << u, 1 << v
            for i, s in enumerate(basis.configurations):
                if not (s >> c) & 1:
                    continue
                if ((s >> u) & 1) == ((s >> v) & 1):
                    continue
                j = basis.index_of.get(s ^ bu ^ bv)
                if j is not None:
                    b.add_offdiag(j, i, -t)
    return b.finish()


def _build_tim(model: TimHamiltonian, basis: BasisSpace) -> SparseOperator:
    b = _Builder(basis)
    if model.form == "occupation":
        for i, s in enumerate(basis.configurations):
            d = model.energy_shift
            for u, mu in model.longitudinal.items():
                if (s >> u) & 1:
                    d += mu
            for (u, v), w in model.ising.items():
                if (s >> u) & 1 and (s >> v) & 1:
                    d += w
            b.diag[i] = d
    else:
        for i, s in enumerate(basis.configurations):
            d = model.energy_shift
            for u, g in model.longitudinal.items():
                d += g * (1 - 2 * ((s >> u) & 1))
            for (u, v), g in model.ising.items():
                d += g * (1 - 2 * ((s >> u) & 1)) * (1 - 2 * ((s >> v) & 1))
            b.diag[i] = d
    for u, h in model.transverse.items():
        bu = 1 << u
        for i, s in enumerate(basis.configurations):
            j = basis.index_of.get(s ^ bu)
            if j is not None:
                b.add_offdiag(j, i, h)
    return b.finish()


def _build_stoqlh(model: StoqLhHamiltonian, basis: BasisSpace) -> SparseOperator:
    b = _Builder(basis)
    b.diag[:] = model.energy_shift
    for (pair, M) in model.two_local_terms:
        u, v = pair
        bu, bv = 1 << u, 1 << v
        for i, s in enumerate(basis.configurations):
            a = 2 * ((s >> u) & 1) + ((s >> v) & 1)
            b.diag[i] += M[a, a]
            for loc in range(4):
                if loc == a or M[loc, a] == 0.0:
                    continue
                s2 = (s & ~(bu | bv)) | (bu if loc & 2 else 0) | (bv if loc & 1 else 0)
                j = basis.index_of.get(s2)
                if j is not None:
                    b.add_offdiag(j, i, M[loc, a])
    for (subset, x, p) in model.k_local_diagonal:
        for i, s in enumerate(basis.configurations):
            local = 0
            for pos, q in enumerate(subset):
                local |= ((s >> q) & 1) << pos
            if local == x:
                b.diag[i] -= p
    return b.finish()


def build_matrix(model: ModelHamiltonian, basis: BasisSpace) -> SparseOperator:
    """Assemble the model Hamiltonian in the given basis (sector-projected)."""
    if isinstance(model, TimHamiltonian):
        if basis.node_count != model.n:
            raise ValidationError("basis node count does not match TIM qubit count")
        return _build_tim(model, basis)
    if isinstance(model, StoqLhHamiltonian):
        return _build_stoqlh(model, basis)
    if isinstance(model, (HcbHamiltonian, HcdHamiltonian)):
        if basis.node_count != model.n:
            raise ValidationError("basis node count does not match model graph")
        return _build_particle(model, basis)
    raise ValidationError(f"unknown model {type(model).__name__}")
