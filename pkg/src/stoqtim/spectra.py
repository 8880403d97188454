"""Eigensolvers, effective-Hamiltonian oracles, and simulation-error measurement.

The exact effective Hamiltonian is realized through the direct rotation: the
unique isometry with block-off-diagonal generator that maps the coordinate
low block onto the computed low-energy eigenspace.  The order-k oracle
assembles the perturbation-series coefficients

    H_1 = V__,
    H_2 = -D^-1 V_-+ H0^-1 V_+-,
    H_3 = D^-2 V_-+ H0^-1 V_++ H0^-1 V_+-  -  (D^-2/2)(V_-+ H0^-2 V_+- V_-- + h.c.)

literally, with H0^-1 applied on the plus block only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import GapClosureError, IllConditionedRotationError, SolverError, ValidationError
from .operators import SparseOperator

DENSE_CUTOFF = 2048
RESIDUAL_TOL = 1e-9
GAP_TOL = 1e-10
# sin(theta_max) >= 1 - 1e-8 means the subspaces are nearly orthogonal.
ROTATION_SIN_LIMIT = 1.0 - 1e-8

_rng = np.random.default_rng(0)


def set_seed(seed: int) -> None:
    """Reseed the deterministic RNG used for iterative-solver start vectors."""
    global _rng
    _rng = np.random.default_rng(seed)


@dataclass(frozen=True)
class BlockSplit:
    """Coordinate split of a simulator space into a low block and its complement."""

    minus_indices: tuple[int, ...]
    plus_indices: tuple[int, ...]

    @staticmethod
    def from_minus(minus, dimension: int) -> "BlockSplit":
        minus = tuple(sorted(int(i) for i in minus))
        mset = set(minus)
        if not minus:
            raise ValidationError("minus block must be nonempty")
        if len(mset) != len(minus) or minus[-1] >= dimension:
            raise ValidationError("minus indices must be distinct and in range")
        plus = tuple(i for i in range(dimension) if i not in mset)
        return BlockSplit(minus, plus)


@dataclass(frozen=True)
class EffectiveHamiltonian:
    """Low-block effective Hamiltonian, exact or truncated at order k."""

    order: int  # 1, 2, 3, or 0 for exact
    matrix: np.ndarray
    delta_used: float

    @property
    def is_exact(self) -> bool:
        return self.order == 0

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class SimulationError:
    """Measured pair (eta, epsilon) plus per-level eigenvalue deviations."""

    eta: float
    epsilon: float
    per_level_deviation: tuple[float, ...]


def lowest_eigenpairs(op: SparseOperator, count: int,
                      maxiter: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """The ``count`` smallest eigenvalues (ascending) with orthonormal eigenvectors.

    Dense solver below DENSE_CUTOFF, implicitly restarted Lanczos (ARPACK,
    full reorthogonalization) above; residuals are checked against
    RESIDUAL_TOL * max(1, |H|).
    """
    d = op.dimension
    if count > d:
        raise ValidationError(f"requested {count} eigenpairs of a {d}-dim operator")
    if d <= DENSE_CUTOFF or count > d - 2:
        w, v = np.linalg.eigh(op.to_dense())
        return w[:count], v[:, :count]
    v0 = _rng.standard_normal(d)
    try:
        w, v = spla.eigsh(op.matrix, k=count, which="SA", v0=v0,
                          maxiter=maxiter, tol=0)
    except spla.ArpackNoConvergence as exc:
        raise SolverError(f"Lanczos failed to converge: {exc}") from exc
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    scale = max(1.0, float(abs(op.matrix).sum(axis=1).max()))
    res = np.linalg.norm(op.matrix @ v - v * w, axis=0)
    if np.any(res > RESIDUAL_TOL * scale):
        raise SolverError(f"eigenpair residual {res.max():.3e} exceeds tolerance")
    return w, v


def spectral_gap(op: SparseOperator, above_level: int) -> float:
    """lambda_{N+1} - lambda_N (1-indexed levels)."""
    if above_level >= op.dimension:
        raise ValidationError("above_level must be below the operator dimension")
    w, _ = lowest_eigenpairs(op, above_level + 1)
    return float(w[above_level] - w[above_level - 1])


def _direct_rotation(low_vectors: np.ndarray, embed: np.ndarray) -> np.ndarray:
    """Isometry with range span(low_vectors) closest to the isometry ``embed``.

    Computed as V @ polar(V^T E): the minimal rotation of Im(E) onto the
    low-energy eigenspace.  Raises when the subspaces are nearly orthogonal.
    """
    A = low_vectors.T @ embed
    U, s, Vt = np.linalg.svd(A)
    s_min = s.min() if s.size else 0.0
    sin_max = np.sqrt(max(0.0, 1.0 - min(1.0, s_min) ** 2))
    if sin_max >= ROTATION_SIN_LIMIT:
        raise IllConditionedRotationError(
            f"subspaces nearly orthogonal (min principal cosine {s_min:.3e})")
    return low_vectors @ (U @ Vt)


def effective_hamiltonian_exact(H_sim: SparseOperator, split: BlockSplit) -> EffectiveHamiltonian:
    """Exact effective Hamiltonian on the minus block via the direct rotation.

    Its eigenvalues coincide with the N_minus lowest eigenvalues of H_sim up
    to solver tolerance.
    """
    n_minus = len(split.minus_indices)
    d = H_sim.dimension
    if n_minus >= d:
        raise ValidationError("minus block must be a proper subspace")
    w, v = lowest_eigenpairs(H_sim, min(d, n_minus + 1))
    if w.shape[0] > n_minus and w[n_minus] - w[n_minus - 1] < GAP_TOL:
        raise GapClosureError(
            f"eigenvalues {n_minus} and {n_minus + 1} coincide within {GAP_TOL}")
    low = v[:, :n_minus]
    embed = np.zeros((d, n_minus))
    embed[list(split.minus_indices), np.arange(n_minus)] = 1.0
    rot = _direct_rotation(low, embed)
    # rot = low @ R with R orthogonal, so rot^T H rot = R^T diag(w) R.
    R = low.T @ rot
    heff = R.T @ np.diag(w[:n_minus]) @ R
    heff = 0.5 * (heff + heff.T)
    return EffectiveHamiltonian(0, heff, float("nan"))


def _plus_solve(H0pp: sp.csr_matrix, B: np.ndarray) -> np.ndarray:
    """Solve H0pp X = B on the plus block."""
    if B.size == 0:
        return B
    d = H0pp.shape[0]
    diag = H0pp.diagonal()
    if (H0pp - sp.diags(diag)).nnz == 0:
        if np.any(np.abs(diag) < 1e-14):
            raise ValidationError("singular plus block in H0")
        return B / diag[:, None]
    if d <= DENSE_CUTOFF:
        return np.linalg.solve(H0pp.toarray(), B)
    return spla.splu(H0pp.tocsc()).solve(B)


def effective_hamiltonian_order_k(H0: SparseOperator, V: SparseOperator,
                                  split: BlockSplit, delta: float,
                                  k: int) -> EffectiveHamiltonian:
    """Truncated effective Hamiltonian sum_{j<=k} H_j for H_sim = delta*H0 + V."""
    if k not in (1, 2, 3):
        raise ValidationError("order k must be 1, 2, or 3")
    mi = np.asarray(split.minus_indices, dtype=int)
    pi = np.asarray(split.plus_indices, dtype=int)
    H0mm = H0.matrix[np.ix_(mi, mi)]
    if H0mm.nnz and abs(H0mm).max() > 1e-12:
        raise ValidationError("(H0)__ must vanish on the minus block")
    H0pp = H0.matrix[np.ix_(pi, pi)].tocsr()
    if pi.size:
        dmin = H0pp.diagonal().min()
        if (H0pp - sp.diags(H0pp.diagonal())).nnz == 0:
            if dmin < 1.0 - 1e-9:
                raise ValidationError(f"(H0)++ must have eigenvalues >= 1, found {dmin}")
        else:
            lo = SparseOperator(H0pp)
            wmin = lowest_eigenpairs(lo, 1)[0][0]
            if wmin < 1.0 - 1e-9:
                raise ValidationError(f"(H0)++ must have eigenvalues >= 1, found {wmin}")
    Vmm = V.matrix[np.ix_(mi, mi)].toarray()
    heff = Vmm.copy()
    if k >= 2 and pi.size:
        Vpm = V.matrix[np.ix_(pi, mi)].toarray()
        X1 = _plus_solve(H0pp, Vpm)  # H0^-1 V_+-
        heff -= (Vpm.T @ X1) / delta
        if k >= 3:
            Vpp = V.matrix[np.ix_(pi, pi)]
            Y = _plus_solve(H0pp, Vpp @ X1)  # H0^-1 V_++ H0^-1 V_+-
            heff += (Vpm.T @ Y) / delta**2
            X2 = _plus_solve(H0pp, X1)  # H0^-2 V_+-
            corr = (Vpm.T @ X2) @ Vmm / delta**2
            heff -= 0.5 * (corr + corr.T)
    heff = 0.5 * (heff + heff.T)
    return EffectiveHamiltonian(k, heff, delta)


def measure_simulation_error(H_target: SparseOperator, H_sim: SparseOperator,
                             embed: np.ndarray) -> SimulationError:
    """Definition-1 error of (H_sim, E) against H_target.

    ``embed`` is the dense (dim_sim x N) encoding isometry E.  The witness
    isometry is the direct rotation of Im(E) onto the N-dimensional low-energy
    subspace of H_sim; epsilon is the spectral norm of the N x N difference
    and eta the largest singular value of E - E_tilde.
    """
    N = H_target.dimension
    if embed.shape != (H_sim.dimension, N):
        raise ValidationError(
            f"encoding shape {embed.shape} does not match ({H_sim.dimension}, {N})")
    if N > H_sim.dimension:
        raise ValidationError("target dimension exceeds simulator dimension")
    if N == H_sim.dimension:
        w, v = lowest_eigenpairs(H_sim, N)
    else:
        w, v = lowest_eigenpairs(H_sim, N + 1)
        if w[N] - w[N - 1] < GAP_TOL:
            raise GapClosureError(
                f"low-energy boundary degenerate: gap {w[N] - w[N - 1]:.3e}")
    low = v[:, :N]
    tilde = _direct_rotation(low, embed)
    R = low.T @ tilde
    reduced = R.T @ np.diag(w[:N]) @ R
    diff = H_target.to_dense() - reduced
    diff = 0.5 * (diff + diff.T)
    epsilon = float(np.abs(np.linalg.eigvalsh(diff)).max())
    eta = float(np.linalg.svd(embed - tilde, compute_uv=False).max()) if N else 0.0
    target_w = np.linalg.eigvalsh(H_target.to_dense())
    per_level = tuple(float(abs(w[i] - target_w[i])) for i in range(N))
    return SimulationError(eta, epsilon, per_level)
