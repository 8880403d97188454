"""Decomposition of two-local stoquastic terms into elementary interactions.

Every real symmetric 4x4 term with non-positive off-diagonal entries splits
into a diagonal remainder plus nonnegative weights on six elementary
interactions (a constructive convexity argument on the Pauli expansion):

    X0:  -X (x) |0><0|       X1:  -X (x) |1><1|
    0X:  -|0><0| (x) X       1X:  -|1><1| (x) X
    HOP+: -(XX + YY)/2       HOP-: -(XX - YY)/2

The HOP+ kind is a symmetric particle exchange |01><10| + h.c. and HOP- the
pair flip |00><11| + h.c.; the normalization -(.)/2 makes the weight equal
the magnitude of the induced off-diagonal matrix element.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .models import StoqLhHamiltonian

ELEMENTARY_KINDS = ("X0", "X1", "0X", "1X", "HOP+", "HOP-")

# 4x4 matrices of the unit-weight elementary interactions, basis index 2*x_u + x_v.
_ELEM_CELLS = {
    "X0": ((0, 2),),
    "X1": ((1, 3),),
    "0X": ((0, 1),),
    "1X": ((2, 3),),
    "HOP+": ((1, 2),),
    "HOP-": ((0, 3),),
}


def elementary_matrix(kind: str) -> np.ndarray:
    M = np.zeros((4, 4))
    for (i, j) in _ELEM_CELLS[kind]:
        M[i, j] = M[j, i] = -1.0
    return M


@dataclass(frozen=True)
class ElementaryTerm:
    """Nonnegative weight on one elementary interaction applied to a qubit pair."""

    kind: str
    qubits: tuple[int, int]
    weight: float

    def matrix(self) -> np.ndarray:
        return self.weight * elementary_matrix(self.kind)


# Diagonal tables map () -> constant, (q,) -> n_q coefficient,
# (q, q') with q < q' -> n_q n_q' coefficient (occupation form over qubits).
DiagonalTable = dict[tuple[int, ...], float]


def _add_diag(table: DiagonalTable, key: tuple[int, ...], val: float) -> None:
    if val != 0.0:
        table[key] = table.get(key, 0.0) + val


def _diag_values_to_table(pair: tuple[int, int], d: np.ndarray, table: DiagonalTable) -> None:
    """Fold diagonal values (d_00, d_01, d_10, d_11) on (u, v) into occupation form."""
    u, v = pair
    _add_diag(table, (), d[0])
    _add_diag(table, (u,), d[2] - d[0])
    _add_diag(table, (v,), d[1] - d[0])
    key = (u, v) if u < v else (v, u)
    _add_diag(table, key, d[3] - d[2] - d[1] + d[0])


def decompose_term(pair: tuple[int, int], M: np.ndarray,
                   tol: float = 1e-12) -> tuple[np.ndarray, list[ElementaryTerm]]:
    """Split one two-local term into (diagonal values, elementary terms).

    Raises ValidationError naming the violated sign condition when the term
    is not stoquastic.
    """
    M = np.asarray(M, dtype=float)
    # Pauli coefficients of G = -M restricted to the off-diagonal-generating part.
    G = -M
    h_XI = (G[0, 2] + G[1, 3]) / 2.0
    h_XZ = (G[0, 2] - G[1, 3]) / 2.0
    h_IX = (G[0, 1] + G[2, 3]) / 2.0
    h_ZX = (G[0, 1] - G[2, 3]) / 2.0
    h_XX = (G[0, 3] + G[1, 2]) / 2.0
    h_YY = (G[1, 2] - G[0, 3]) / 2.0
    weights = {
        "X0": (h_XI + h_XZ, "h_XI + h_XZ"),
        "X1": (h_XI - h_XZ, "h_XI - h_XZ"),
        "0X": (h_IX + h_ZX, "h_IX + h_ZX"),
        "1X": (h_IX - h_ZX, "h_IX - h_ZX"),
        "HOP+": (h_XX + h_YY, "h_XX + h_YY"),
        "HOP-": (h_XX - h_YY, "h_XX - h_YY"),
    }
    terms = []
    for kind in ELEMENTARY_KINDS:
        w, name = weights[kind]
        if w < -tol:
            (i, j) = _ELEM_CELLS[kind][0]
            raise ValidationError(
                f"term on qubits {pair} is not stoquastic: {name} = {w:+g} < 0 "
                f"(matrix entry <{i:02b}|H|{j:02b}> = {M[i, j]:+g})")
        if w > 0.0:
            terms.append(ElementaryTerm(kind, pair, float(w)))
    recon = sum((t.matrix() for t in terms), np.zeros((4, 4)))
    diag = np.diag(M - recon).copy()
    offresid = (M - recon) - np.diag(diag)
    if np.abs(offresid).max(initial=0.0) > 1e-9:
        raise ValidationError(f"decomposition residual {np.abs(offresid).max():.3e} on {pair}")
    return diag, terms


def decompose_two_local_stoquastic(
        H: StoqLhHamiltonian) -> tuple[DiagonalTable, list[ElementaryTerm]]:
    """Decompose every two-local term of H; reconstruction equals H exactly.

    Returns the combined diagonal part (occupation form over qubits, including
    H's scalar shift under key ()) and the elementary terms in canonical order.
    The k-local diagonal extension of H is NOT folded in; it is handled by the
    projector translation in the reduction step.
    """
    table: DiagonalTable = {}
    _add_diag(table, (), H.energy_shift)
    collected: dict[tuple[str, tuple[int, int]], float] = {}
    for (pair, M) in H.two_local_terms:
        diag, terms = decompose_term(pair, M)
        _diag_values_to_table(pair, diag, table)
        for t in terms:
            key = (t.kind, t.qubits)
            collected[key] = collected.get(key, 0.0) + t.weight
    out = [ElementaryTerm(kind, pair, w)
           for (kind, pair), w in sorted(collected.items(), key=lambda kv: (kv[0][1], kv[0][0]))]
    return table, out


def reconstruct(table: DiagonalTable, terms: list[ElementaryTerm],
                n: int) -> StoqLhHamiltonian:
    """Rebuild a StoqLH model from a decomposition (testing aid)."""
    per_pair: dict[tuple[int, int], np.ndarray] = {}

    def block(u: int, v: int) -> np.ndarray:
        key = (u, v) if u < v else (v, u)
        return per_pair.setdefault(key, np.zeros((4, 4)))

    shift = table.get((), 0.0)
    for key, val in table.items():
        if len(key) == 1:
            (q,) = key
            other = (q + 1) % n
            u, v = (q, other) if q < other else (other, q)
            B = block(u, v)
            for a in range(4):
                bit = (a >> 1) & 1 if u == q else a & 1
                B[a, a] += val * bit
        elif len(key) == 2:
            u, v = key
            B = block(u, v)
            for a in range(4):
                B[a, a] += val * ((a >> 1) & 1) * (a & 1)
    for t in terms:
        u, v = t.qubits
        M = t.matrix()
        if u > v:  # transpose the tensor factors
            P = np.zeros((4, 4))
            for a in range(4):
                P[((a & 1) << 1) | (a >> 1), a] = 1.0
            M = P @ M @ P.T
            u, v = v, u
        block(u, v)[:] += M
    return StoqLhHamiltonian(
        n, tuple((pair, M) for pair, M in sorted(per_pair.items())),
        (), 2, shift)
