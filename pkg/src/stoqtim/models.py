"""Model classes: TIM, hard-core bosons/dimers, and 2-local stoquastic Hamiltonians.

All models are immutable value objects holding sparse coefficient tables keyed
by node, node pair, or (control; edge) triple.  Matrix assembly lives in
``operators``; this module owns the coefficient-level transforms (Pauli-Z to
occupation-number rewriting, the linear-field ancilla trick, interpolation)
and the class-membership predicates.

Two TIM coefficient conventions coexist:

* ``form="pauli"``:  H = sum_u h_u X_u + g_u Z_u + sum_{u<v} g_{u,v} Z_u Z_v + shift,
  with ``longitudinal[u] = g_u`` and ``ising[(u,v)] = g_{u,v}``.
* ``form="occupation"``:  H = sum_u mu_u n_u + sum_{u<v} w_{u,v} n_u n_v
  + sum_u h_u X_u + shift, with ``longitudinal[u] = mu_u`` and
  ``ising[(u,v)] = w_{u,v}``.

``n_u = (I - Z_u)/2`` throughout, so a set bit in a configuration bitmask
means an occupied node / Z-eigenvalue -1.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import ValidationError
from .graphs import InteractionGraph, _canon_edge

# Hopping amplitudes below this magnitude are clamped to zero; more negative
# values are rejected.
NEGATIVE_CLAMP = 1e-12


def _clamp_nonneg(t: float, what: str) -> float:
    if t < -NEGATIVE_CLAMP:
        raise ValidationError(f"{what} must be nonnegative, got {t}")
    return 0.0 if t < 0.0 else float(t)


def _canon_node_map(table: dict) -> dict[int, float]:
    return {int(u): float(c) for u, c in table.items() if c != 0.0}

def _canon_edge_map(table: dict) -> dict[tuple[int, int], float]:
    out: dict[tuple[int, int], float] = {}
    for (u, v), c in table.items():
        if u == v:
            raise ValidationError(f"pair coefficient on identical nodes ({u},{v})")
        k = _canon_edge(int(u), int(v))
        out[k] = out.get(k, 0.0) + float(c)
    return {k: c for k, c in out.items() if c != 0.0}


def _table_max(*tables) -> float:
    best = 0.0
    for t in tables:
        for c in t.values() if isinstance(t, dict) else t:
            if abs(c) > best:
                best = abs(c)
    return best


@dataclass(frozen=True)
class TimHamiltonian:
    """Transverse-field Ising Hamiltonian in either coefficient convention."""

    graph: InteractionGraph
    transverse: dict[int, float] = field(default_factory=dict)
    longitudinal: dict[int, float] = field(default_factory=dict)
    ising: dict[tuple[int, int], float] = field(default_factory=dict)
    energy_shift: float = 0.0
    form: str = "occupation"

    def __post_init__(self):
        if self.form not in ("pauli", "occupation"):
            raise ValidationError(f"unknown TIM form {self.form!r}")
        object.__setattr__(self, "transverse", _canon_node_map(self.transverse))
        object.__setattr__(self, "longitudinal", _canon_node_map(self.longitudinal))
        object.__setattr__(self, "ising", _canon_edge_map(self.ising))
        n = self.graph.node_count
        for u in list(self.transverse) + list(self.longitudinal):
            if not 0 <= u < n:
                raise ValidationError(f"node coefficient out of range: {u}")
        for (u, v) in self.ising:
            if not (0 <= u < n and 0 <= v < n):
                raise ValidationError(f"ising pair out of range: ({u},{v})")

    @property
    def n(self) -> int:
        return self.graph.node_count

    def interaction_strength(self) -> float:
        """J: max magnitude over all coefficients."""
        return _table_max(self.transverse, self.longitudinal, self.ising)

    def zz_degree(self, u: int) -> int:
        return sum(1 for (a, b) in self.ising if u in (a, b))

    def max_zz_degree(self) -> int:
        deg: dict[int, int] = {}
        for (a, b) in self.ising:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        return max(deg.values(), default=0)

    def is_degree3(self) -> bool:
        return self.max_zz_degree() <= 3

    def stoquastic_frame(self) -> tuple["TimHamiltonian", tuple[int, ...]]:
        """Conjugate by Z_u on every qubit with h_u > 0, flipping the X sign.

        Returns the conjugated (stoquastic-in-Z-basis) model and the tuple of
        conjugated qubits; the conjugation is diagonal so the spectrum and all
        Z/ZZ coefficients are unchanged.
        """
        flipped = tuple(sorted(u for u, h in self.transverse.items() if h > 0))
        if not flipped:
            return self, ()
        tr = {u: (-h if u in flipped else h) for u, h in self.transverse.items()}
        return replace(self, transverse=tr), flipped


@dataclass(frozen=True)
class HcbHamiltonian:
    """Hard-core bosons: m-particle sector, range r in {1, 2}.

    ``controlled_hopping`` maps (c, (u, v)) -> t >= 0 and encodes -t n_c W_{u,v};
    it is only populated for the HCB* variant.  ``projector_terms`` is a list of
    (node-set, weight p >= 0) pairs encoding -p * prod_{u in S}(I - n_u).
    """

    graph: InteractionGraph
    particle_count: int
    range_: int = 1
    hopping: dict[tuple[int, int], float] = field(default_factory=dict)
    controlled_hopping: dict[tuple[int, tuple[int, int]], float] = field(default_factory=dict)
    chemical: dict[int, float] = field(default_factory=dict)
    pair_potential: dict[tuple[int, int], float] = field(default_factory=dict)
    projector_terms: tuple[tuple[frozenset[int], float], ...] = ()
    energy_shift: float = 0.0

    def __post_init__(self):
        if self.range_ not in (1, 2):
            raise ValidationError(f"unsupported range {self.range_}")
        if self.particle_count < 0:
            raise ValidationError("particle_count must be nonnegative")
        hop = {}
        for (u, v), t in self.hopping.items():
            k = _canon_edge(int(u), int(v))
            if k not in self.graph.edges:
                raise ValidationError(f"hopping on non-edge {k}")
            hop[k] = hop.get(k, 0.0) + _clamp_nonneg(t, f"hopping t_{k}")
        object.__setattr__(self, "hopping", {k: t for k, t in hop.items() if t != 0.0})
        chop = {}
        for (c, (u, v)), t in self.controlled_hopping.items():
            k = _canon_edge(int(u), int(v))
            c = int(c)
            if c in k:
                raise ValidationError(f"control node {c} must not be an endpoint of {k}")
            if k not in self.graph.edges:
                raise ValidationError(f"controlled hopping on non-edge {k}")
            key = (c, k)
            chop[key] = chop.get(key, 0.0) + _clamp_nonneg(t, f"controlled hopping t_({c};{k})")
        object.__setattr__(self, "controlled_hopping", {k: t for k, t in chop.items() if t != 0.0})
        object.__setattr__(self, "chemical", _canon_node_map(self.chemical))
        object.__setattr__(self, "pair_potential", _canon_edge_map(self.pair_potential))
        terms = []
        for (nodes, p) in self.projector_terms:
            terms.append((frozenset(int(u) for u in nodes),
                          _clamp_nonneg(p, "projector weight p")))
        object.__setattr__(self, "projector_terms", tuple(terms))

    @property
    def n(self) -> int:
        return self.graph.node_count

    @property
    def m(self) -> int:
        return self.particle_count

    def interaction_strength(self) -> float:
        return _table_max(self.hopping, self.controlled_hopping, self.chemical,
                          self.pair_potential, [p for _, p in self.projector_terms])

    def has_controlled_hopping(self) -> bool:
        return bool(self.controlled_hopping)


@dataclass(frozen=True)
class HcdHamiltonian:
    """Hard-core dimers: m-dimer sector on a triangle-free graph, single hop amplitude."""

    graph: InteractionGraph
    dimer_count: int
    hopping: float = 0.0
    chemical: dict[int, float] = field(default_factory=dict)
    pair_potential: dict[tuple[int, int], float] = field(default_factory=dict)
    energy_shift: float = 0.0

    def __post_init__(self):
        if self.dimer_count < 0:
            raise ValidationError("dimer_count must be nonnegative")
        object.__setattr__(self, "hopping", _clamp_nonneg(self.hopping, "dimer hopping t"))
        if not self.graph.is_triangle_free():
            raise ValidationError("hard-core dimers require a triangle-free graph")
        object.__setattr__(self, "chemical", _canon_node_map(self.chemical))
        object.__setattr__(self, "pair_potential", _canon_edge_map(self.pair_potential))

    @property
    def n(self) -> int:
        return self.graph.node_count

    @property
    def m(self) -> int:
        return self.dimer_count

    def interaction_strength(self) -> float:
        return _table_max(self.chemical, self.pair_potential, [self.hopping])


@dataclass(frozen=True)
class StoqLhHamiltonian:
    """(2, k)-local stoquastic Hamiltonian on qubits.

    ``two_local_terms`` is a list of ((u, v), M) with M a real symmetric 4x4
    matrix acting on qubits (u, v) in the standard product basis (u is the
    first tensor factor; row index 2*x_u + x_v).  Off-diagonal entries must be
    non-positive.  ``k_local_diagonal`` lists (M, x, p) triples contributing
    -p |x><x|_M per the diagonal extension.
    """

    qubit_count: int
    two_local_terms: tuple[tuple[tuple[int, int], np.ndarray], ...] = ()
    k_local_diagonal: tuple[tuple[tuple[int, ...], int, float], ...] = ()
    locality_k: int = 2
    energy_shift: float = 0.0

    def __post_init__(self):
        if self.qubit_count <= 0:
            raise ValidationError("qubit_count must be positive")
        if self.locality_k < 2:
            raise ValidationError("locality_k must be >= 2")
        terms = []
        for (pair, mat) in self.two_local_terms:
            u, v = int(pair[0]), int(pair[1])
            if u == v or not (0 <= u < self.qubit_count and 0 <= v < self.qubit_count):
                raise ValidationError(f"bad qubit pair ({u},{v})")
            M = np.asarray(mat, dtype=float)
            if M.shape != (4, 4):
                raise ValidationError("two-local term must be a 4x4 matrix")
            if not np.allclose(M, M.T, atol=1e-12):
                raise ValidationError(f"two-local term on ({u},{v}) is not symmetric")
            off = M - np.diag(np.diag(M))
            if off.max(initial=0.0) > NEGATIVE_CLAMP:
                i, j = np.unravel_index(np.argmax(off), off.shape)
                raise ValidationError(
                    f"term on qubits ({u},{v}) is not stoquastic: "
                    f"entry <{i:02b}|H|{j:02b}> = {M[i, j]:+g} > 0")
            M = M.copy()
            M.setflags(write=False)
            terms.append(((u, v), M))
        object.__setattr__(self, "two_local_terms", tuple(terms))
        diag = []
        for (subset, x, p) in self.k_local_diagonal:
            subset = tuple(sorted(int(q) for q in subset))
            if len(subset) > self.locality_k:
                raise ValidationError(f"diagonal term on {len(subset)} qubits exceeds k={self.locality_k}")
            if any(not 0 <= q < self.qubit_count for q in subset):
                raise ValidationError(f"diagonal subset out of range: {subset}")
            x = int(x)
            if not 0 <= x < (1 << len(subset)):
                raise ValidationError(f"bitstring {x} out of range for subset of size {len(subset)}")
            diag.append((subset, x, float(p)))
        object.__setattr__(self, "k_local_diagonal", tuple(diag))

    @property
    def n(self) -> int:
        return self.qubit_count

    def interaction_strength(self) -> float:
        best = max((float(np.abs(M).max()) for _, M in self.two_local_terms), default=0.0)
        return max(best, max((abs(p) for *_, p in self.k_local_diagonal), default=0.0))


ModelHamiltonian = Union[TimHamiltonian, HcbHamiltonian, HcdHamiltonian, StoqLhHamiltonian]


def model_class(model: ModelHamiltonian) -> str:
    """Class tag: tim | hcd | hcb | hcbstar | stoqlh."""
    if isinstance(model, TimHamiltonian):
        return "tim"
    if isinstance(model, HcdHamiltonian):
        return "hcd"
    if isinstance(model, HcbHamiltonian):
        return "hcbstar" if model.has_controlled_hopping() else "hcb"
    if isinstance(model, StoqLhHamiltonian):
        return "stoqlh"
    raise ValidationError(f"unknown model {type(model).__name__}")


def pauli_to_occupation(H: TimHamiltonian) -> TimHamiltonian:
    """Rewrite the Pauli-Z form into occupation-number form via Z_u = I - 2 n_u.

    w_{u,v} = 4 g_{u,v}, mu_u = -2 g_u - 2 sum_{v != u} g_{u,v}; the scalar
    left over by the substitution is added to ``energy_shift`` so both forms
    have identical spectra.
    """
    if H.form == "occupation":
        return H
    mu = {u: -2.0 * g for u, g in H.longitudinal.items()}
    omega = {}
    shift = H.energy_shift + sum(H.longitudinal.values())
    for (u, v), g in H.ising.items():
        omega[(u, v)] = 4.0 * g
        mu[u] = mu.get(u, 0.0) - 2.0 * g
        mu[v] = mu.get(v, 0.0) - 2.0 * g
        shift += g
    return TimHamiltonian(H.graph, dict(H.transverse), mu, omega, shift, form="occupation")


def occupation_to_pauli(H: TimHamiltonian) -> TimHamiltonian:
    """Inverse of :func:`pauli_to_occupation`."""
    if H.form == "pauli":
        return H
    g1 = {u: -0.5 * mu for u, mu in H.longitudinal.items()}
    g2 = {}
    shift = H.energy_shift + 0.5 * sum(H.longitudinal.values())
    for (u, v), w in H.ising.items():
        g2[(u, v)] = 0.25 * w
        g1[u] = g1.get(u, 0.0) - 0.25 * w
        g1[v] = g1.get(v, 0.0) - 0.25 * w
        shift += 0.25 * w
    return TimHamiltonian(H.graph, dict(H.transverse), g1, g2, shift, form="pauli")


def absorb_linear_field(H: TimHamiltonian) -> TimHamiltonian:
    """Replace every longitudinal g_u Z_u by g_u Z_u Z_a on a fresh ancilla qubit.

    The output acts on n+1 qubits (ancilla index n) and its spectrum equals
    the input spectrum with every multiplicity doubled.
    """
    P = occupation_to_pauli(H)
    n = P.n
    a = n
    edges = set(P.graph.edges)
    ising = dict(P.ising)
    for u, g in P.longitudinal.items():
        ising[(u, a)] = ising.get((u, a), 0.0) + g
        edges.add((u, a))
    graph = InteractionGraph.build(n + 1, edges)
    out = TimHamiltonian(graph, dict(P.transverse), {}, ising, P.energy_shift, form="pauli")
    return out if H.form == "pauli" else pauli_to_occupation(out)


def interpolate_models(A: ModelHamiltonian, B: ModelHamiltonian, tau: float) -> ModelHamiltonian:
    """(1 - tau) A + tau B for two models of the same class on the same graph/sector."""
    if type(A) is not type(B):
        raise ValidationError("cannot interpolate models of different classes")
    s, t = 1.0 - tau, tau

    def mix(da: dict, db: dict) -> dict:
        out = {k: s * v for k, v in da.items()}
        for k, v in db.items():
            out[k] = out.get(k, 0.0) + t * v
        return out

    if isinstance(A, TimHamiltonian):
        if A.graph.node_count != B.graph.node_count or A.form != B.form:
            raise ValidationError("TIM endpoints differ in size or form")
        graph = InteractionGraph.build(
            A.graph.node_count, set(A.graph.edges) | set(B.graph.edges))
        return TimHamiltonian(graph, mix(A.transverse, B.transverse),
                              mix(A.longitudinal, B.longitudinal), mix(A.ising, B.ising),
                              s * A.energy_shift + t * B.energy_shift, form=A.form)
    if isinstance(A, StoqLhHamiltonian):
        if A.qubit_count != B.qubit_count:
            raise ValidationError("endpoint qubit counts differ")
        terms: dict[tuple[int, int], np.ndarray] = {}
        for w, model in ((s, A), (t, B)):
            for (pair, M) in model.two_local_terms:
                terms[pair] = terms.get(pair, np.zeros((4, 4))) + w * M
        diag: dict[tuple[tuple[int, ...], int], float] = {}
        for w, model in ((s, A), (t, B)):
            for (subset, x, p) in model.k_local_diagonal:
                diag[(subset, x)] = diag.get((subset, x), 0.0) + w * p
        return StoqLhHamiltonian(
            A.qubit_count,
            tuple((pair, M) for pair, M in sorted(terms.items())),
            tuple((subset, x, p) for (subset, x), p in sorted(diag.items())),
            max(A.locality_k, B.locality_k),
            s * A.energy_shift + t * B.energy_shift)
    if isinstance(A, HcbHamiltonian):
        if (A.graph != B.graph or A.particle_count != B.particle_count
                or A.range_ != B.range_):
            raise ValidationError("HCB endpoints differ in structure")
        proj: dict[frozenset[int], float] = {}
        for w, model in ((s, A), (t, B)):
            for (nodes, p) in model.projector_terms:
                proj[nodes] = proj.get(nodes, 0.0) + w * p
        return HcbHamiltonian(A.graph, A.particle_count, A.range_,
                              mix(A.hopping, B.hopping),
                              mix(A.controlled_hopping, B.controlled_hopping),
                              mix(A.chemical, B.chemical),
                              mix(A.pair_potential, B.pair_potential),
                              tuple(sorted(proj.items(), key=lambda kv: sorted(kv[0]))),
                              s * A.energy_shift + t * B.energy_shift)
    if isinstance(A, HcdHamiltonian):
        if A.graph != B.graph or A.dimer_count != B.dimer_count:
            raise ValidationError("HCD endpoints differ in structure")
        return HcdHamiltonian(A.graph, A.dimer_count, s * A.hopping + t * B.hopping,
                              mix(A.chemical, B.chemical), mix(A.pair_potential, B.pair_potential),
                              s * A.energy_shift + t * B.energy_shift)
    raise ValidationError(f"unknown model {type(A).__name__}")
