"""Gadget compilers: one constructor per perturbative reduction.

Each ``reduce_*`` function takes a target model and returns a
:class:`ReductionStep` holding the simulator model, the encoding (lazily
materialized), the chosen gap parameters, and the unscaled gadget pieces
(H0, V_main, V_extra, V~_extra) needed by the verification harness.  Step
constructors do coefficient work only; bases and matrices are built on
demand so that structurally large outputs remain representable.

Node-index conventions (original node ids are always preserved):

* dual rail: qubit i -> nodes t(i) = 2i, b(i) = 2i + 1; hop ancillas appended;
* controlled hopping: one ancilla per (c; u, v) triple, appended in key order;
* edge subdivision: midpoint of the k-th edge (sorted) appended after U;
* dimer embedding: star u* = n + u, then edge midpoints;
* degree-3 grid: chain qubit (u, i) -> u * m + i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from . import calibration
from .basis import (BasisSpace, DEFAULT_DIMENSION_CAP, enumerate_basis,
                    enumerate_filtered, enumerate_particle_window,
                    enumerate_qubit_register, enumerate_sparse_subsets, mask_nodes)
from .chain import ChainParams, chain_energies, chain_splitting, chain_xi, select_chain_parameters
from .decompose import (ElementaryTerm, decompose_two_local_stoquastic,
                        reconstruct)
from .encodings import Encoding
from .errors import ScaleInfeasibleError, UnreachableTargetError, ValidationError
from .graphs import InteractionGraph
from .models import (HcbHamiltonian, HcdHamiltonian, ModelHamiltonian,
                     StoqLhHamiltonian, TimHamiltonian, model_class,
                     occupation_to_pauli)
from .operators import SparseOperator, build_matrix
from .spectra import BlockSplit

STEP_NAMES = ("stoqlh_to_hcbstar", "hcbstar_to_hcb1", "hcb1_to_hcb2",
              "multi_to_hcb2", "hcb2_to_hcd", "hcd_to_tim", "tim_to_degree3")

DEFAULT_VERIFY_CAP = 4096


@dataclass(frozen=True)
class ReductionParams:
    """Error budget and gap-selection policy for a reduction chain."""

    eps_total: float = 0.1
    eta_total: float = 0.1
    delta_mode: str = "calibrated"  # "calibrated" | "explicit"
    explicit_delta: Optional[float] = None
    explicit_delta_tilde: Optional[float] = None
    p_min: Optional[float] = None  # None = auto default, 0.0 disables smoothing
    steps_total: int = 1
    dimension_cap: int = DEFAULT_DIMENSION_CAP
    verify_cap: int = DEFAULT_VERIFY_CAP
    chain_length: Optional[int] = None
    chain_exponent: Optional[float] = None
    allow_saturation: bool = False

    def __post_init__(self):
        if self.eps_total <= 0 or self.eta_total <= 0:
            raise ValidationError("error budgets must be positive")
        if self.delta_mode not in ("calibrated", "explicit"):
            raise ValidationError(f"unknown delta mode {self.delta_mode!r}")
        if self.delta_mode == "explicit" and self.explicit_delta is None:
            raise ValidationError("explicit delta mode requires explicit_delta")

    @property
    def eps_step(self) -> float:
        return self.eps_total / (2.0 * self.steps_total)

    @property
    def eta_step(self) -> float:
        return self.eta_total / (2.0 * self.steps_total)


@dataclass(frozen=True)
class GadgetView:
    """Materialized gadget pieces on the (restricted) perturbation sector.

    Operators are unscaled; the simulator on the sector is
    delta*H0 + delta^{1/2} V_main + V_extra            (order 2)
    delta*H0 + delta^{2/3} V_main + delta^{1/3} V~ + V_extra  (order 3).
    The minus block lists sector indices of encoded target configurations;
    ``minus_position_of_target`` gives, for each target basis index, the
    position of its image inside the minus block.
    """

    order: int
    delta: float
    basis: BasisSpace
    split: BlockSplit
    h0: SparseOperator
    v_main: Optional[SparseOperator]
    v_extra: Optional[SparseOperator]
    v_tilde_extra: Optional[SparseOperator]
    minus_position_of_target: tuple[int, ...]

    def sector_hamiltonian(self, delta: Optional[float] = None):
        d = self.delta if delta is None else delta
        H = self.h0.scaled(d)
        if self.order == 1:
            if self.v_extra is not None:
                H = H + self.v_extra
        elif self.order == 2:
            H = H + self.v_main.scaled(d ** 0.5)
            if self.v_extra is not None:
                H = H + self.v_extra
        else:
            H = H + self.v_main.scaled(d ** (2.0 / 3.0))
            if self.v_tilde_extra is not None:
                H = H + self.v_tilde_extra.scaled(d ** (1.0 / 3.0))
            if self.v_extra is not None:
                H = H + self.v_extra
        return H

    def minus_embedding(self) -> np.ndarray:
        """Dense isometry from target coordinates into the sector space."""
        E = np.zeros((self.basis.dimension, len(self.minus_position_of_target)))
        minus = list(self.split.minus_indices)
        for k, pos in enumerate(self.minus_position_of_target):
            E[minus[pos], k] = 1.0
        return E

    def encode_target_matrix(self, target_matrix: np.ndarray) -> np.ndarray:
        """Encoded target on the minus block, in minus-block coordinates."""
        perm = np.asarray(self.minus_position_of_target)
        out = np.zeros_like(target_matrix)
        out[np.ix_(perm, perm)] = target_matrix
        return out


@dataclass(frozen=True)
class ReductionStep:
    """One compiled reduction: target, simulator, encoding, gap choices."""

    name: str
    target: ModelHamiltonian
    simulator: ModelHamiltonian
    delta: float
    delta_tilde: Optional[float]
    budget: tuple[float, float]  # (eta_t, eps_t)
    encoding_kind: str  # "basis-map" | "chain-tensor"
    config_map: Optional[Callable[[int], int]] = field(repr=False, default=None)
    gadget_builder: Optional[Callable[[int], GadgetView]] = field(repr=False, default=None)
    encoding_builder: Optional[Callable[[int], Encoding]] = field(repr=False, default=None)
    effective_target: Optional[ModelHamiltonian] = None
    notes: dict = field(default_factory=dict)

    def encoding(self, cap: int = DEFAULT_DIMENSION_CAP) -> Encoding:
        return self.encoding_builder(cap)

    def gadget_view(self, cap: int = DEFAULT_VERIFY_CAP) -> GadgetView:
        if self.gadget_builder is None:
            raise ValidationError(f"step {self.name} has no gadget view")
        return self.gadget_builder(cap)

    @property
    def smoothed_target(self) -> ModelHamiltonian:
        return self.effective_target if self.effective_target is not None else self.target


def model_sizes(model: ModelHamiltonian) -> tuple[int, int]:
    """(node/qubit count, particle count; 0 for qubit-register models)."""
    if isinstance(model, (TimHamiltonian, StoqLhHamiltonian)):
        return model.n, 0
    return model.n, model.m


def coefficient_norm_bound(model: ModelHamiltonian) -> float:
    """Triangle-inequality upper bound on the operator norm."""
    if isinstance(model, TimHamiltonian):
        return (sum(abs(h) for h in model.transverse.values())
                + sum(abs(c) for c in model.longitudinal.values())
                + sum(abs(c) for c in model.ising.values())
                + abs(model.energy_shift))
    if isinstance(model, HcbHamiltonian):
        return (sum(model.hopping.values()) + sum(model.controlled_hopping.values())
                + sum(abs(c) for c in model.chemical.values())
                + sum(abs(c) for c in model.pair_potential.values())
                + sum(p for _, p in model.projector_terms) + abs(model.energy_shift))
    if isinstance(model, HcdHamiltonian):
        n = model.n
        return (model.hopping * n * (n - 1) / 2
                + sum(abs(c) for c in model.chemical.values())
                + sum(abs(c) for c in model.pair_potential.values()) + abs(model.energy_shift))
    if isinstance(model, StoqLhHamiltonian):
        return (sum(float(np.linalg.norm(M, 2)) for _, M in model.two_local_terms)
                + sum(abs(p) for *_, p in model.k_local_diagonal) + abs(model.energy_shift))
    raise ValidationError(f"unknown model {type(model).__name__}")


# Deep chains compound the sufficient-gap thresholds multiplicatively; beyond this
# many decades over the perturbation scale the absolute budget is out of
# float64 reach and the gap saturates at a fixed ratio instead (flagged in the
# step notes; verification reports the consequence honestly).
SATURATION_RATIO = 1e8
SATURATION_ABS = 1e30


def _sat_value(lam: float, order: int) -> float:
    """Saturated gap: SATURATION_RATIO decades over the validity floor, clamped
    so downstream arithmetic stays inside float64."""
    log10 = math.log10(SATURATION_RATIO) + order * math.log10(lam)
    return 10.0 ** min(log10, 280.0)


# Coefficients of emitted simulators are clamped here; only saturated deep
# chains ever reach this magnitude, and the clamp makes their coefficient
# growth terminate at a finite fixed point instead of overflowing float64.
MAX_COEFFICIENT = 1e100


def _clamp_model(model: ModelHamiltonian) -> tuple[ModelHamiltonian, bool]:
    clamped = False

    def cv(v: float) -> float:
        nonlocal clamped
        if abs(v) > MAX_COEFFICIENT:
            clamped = True
            return math.copysign(MAX_COEFFICIENT, v)
        return v

    def ct(table: dict) -> dict:
        return {k: cv(v) for k, v in table.items()}

    if isinstance(model, TimHamiltonian):
        out = replace(model, transverse=ct(model.transverse),
                      longitudinal=ct(model.longitudinal), ising=ct(model.ising),
                      energy_shift=cv(model.energy_shift))
    elif isinstance(model, HcbHamiltonian):
        out = replace(model, hopping=ct(model.hopping),
                      controlled_hopping=ct(model.controlled_hopping),
                      chemical=ct(model.chemical), pair_potential=ct(model.pair_potential),
                      energy_shift=cv(model.energy_shift))
    elif isinstance(model, HcdHamiltonian):
        out = replace(model, hopping=cv(model.hopping), chemical=ct(model.chemical),
                      pair_potential=ct(model.pair_potential),
                      energy_shift=cv(model.energy_shift))
    else:
        out = model
    return (out if clamped else model), clamped


def _select_delta(order: int, lam: float, eps_t: float, eta_t: float,
                  step_name: str) -> tuple[float, bool]:
    """Gap from the calibrated sufficient-gap thresholds, with an SW-validity floor.

    Returns (delta, saturated)."""
    lam = max(lam, 1e-9)
    K_eps, K_eta = calibration.order_k(order, step_name)
    # log-space evaluation survives astronomically scaled composed inputs
    log_lam = math.log10(lam)
    if order == 1:
        log_base = max(math.log10(K_eps) + 2 * log_lam - math.log10(eps_t),
                       math.log10(K_eta) + log_lam - math.log10(eta_t))
        log_floor = math.log10(4.0) + log_lam
    elif order == 2:
        log_base = max(math.log10(K_eps) + 6 * log_lam - 2 * math.log10(eps_t),
                       math.log10(K_eta) + 2 * log_lam - 2 * math.log10(eta_t))
        log_floor = math.log10(64.0) + 2 * log_lam
    else:
        log_base = max(math.log10(K_eps) + 12 * log_lam - 3 * math.log10(eps_t),
                       math.log10(K_eta) + 3 * log_lam - 3 * math.log10(eta_t))
        log_floor = math.log10(216.0) + 3 * log_lam
    if log_base > 270.0 or log_floor > 270.0:
        return _sat_value(lam, order), True
    if order == 1:
        base = K_eps * lam ** 2 / eps_t + K_eta * lam / eta_t
    elif order == 2:
        base = K_eps * lam ** 6 / eps_t ** 2 + K_eta * lam ** 2 / eta_t ** 2
    else:
        base = K_eps * lam ** 12 / eps_t ** 3 + K_eta * lam ** 3 / eta_t ** 3
    cap = max(SATURATION_ABS, _sat_value(lam, order))
    if base > cap:
        return _sat_value(lam, order), True
    return max(base, 10.0 ** log_floor, 1.0), False


def _select_delta_tilde(inner_norm: float, leak: float, eps_t: float, eta_t: float,
                        direct_leakage: bool = True) -> tuple[float, bool]:
    """Outer restriction gap: at least OUTER_FACTOR x the inner norm.

    When the perturbation couples the logical block directly to the
    outer-penalized subspace, the gap is raised further so the second-order
    leakage correction stays inside the budget; gadgets whose leakage only
    dresses already-excited intermediates skip that term (it would inflate the
    simulator norm, and with it the verification noise floor, for no gain).
    Returns (delta_tilde, saturated).
    """
    floor = max(calibration.OUTER_FACTOR * inner_norm, 4.0 * inner_norm + 1.0)
    if not math.isfinite(floor) or floor > 1e290:
        return 1e290, True
    if not direct_leakage:
        return floor, False
    if leak > 1e140 or not math.isfinite(leak):
        return min(floor * SATURATION_RATIO, 1e290), True
    aware = calibration.OUTER_K * (leak ** 2 / eps_t + leak / eta_t)
    if not math.isfinite(aware) or aware > max(SATURATION_ABS, floor * SATURATION_RATIO):
        return min(max(floor, SATURATION_RATIO * inner_norm), 1e290), True
    return max(floor, aware), False


def _piece_norm(model: Optional[ModelHamiltonian], basis: Optional[BasisSpace]) -> float:
    if model is None:
        return 0.0
    if basis is not None:
        return build_matrix(model, basis).norm_estimate()
    return coefficient_norm_bound(model)


def _numeric_sector(builder: Callable[[], BasisSpace], bound: int,
                    cap: int) -> Optional[BasisSpace]:
    """Enumerate a sector for norm estimates when its size bound fits the cap."""
    if bound > cap:
        return None
    try:
        return builder()
    except ScaleInfeasibleError:
        return None


def _basis_map_encoding(target_model: ModelHamiltonian, sim_model: ModelHamiltonian,
                        config_map: Callable[[int], int]) -> Callable[[int], Encoding]:
    def build(cap: int) -> Encoding:
        tb = enumerate_basis(target_model, cap)
        sb = enumerate_basis(sim_model, cap)
        try:
            mapping = [sb.index_of[config_map(c)] for c in tb.configurations]
        except KeyError as exc:
            raise ValidationError(f"encoded configuration missing from simulator basis: {exc}")
        return Encoding.from_map(mapping, sb.dimension)
    return build


def _merge(dst: dict, src: dict, scale: float = 1.0) -> None:
    for k, v in src.items():
        dst[k] = dst.get(k, 0.0) + scale * v


# ---------------------------------------------------------------------------
# StoqLH -> HCB* (dual-rail step)
# ---------------------------------------------------------------------------

def _smooth(p: float, p_min: float) -> float:
    return math.sqrt(p * p + p_min * p_min) if p_min > 0.0 else p


def _auto_p_min(params: ReductionParams, n_terms: int) -> float:
    if params.p_min is not None:
        return params.p_min
    return params.eps_step * 1e-3 / max(1, n_terms)


def _projector_translation(H: StoqLhHamiltonian, p_min: float
                           ) -> tuple[list[tuple[frozenset[int], float]], float]:
    """k-local diagonal -> dual-rail projector terms with a nonnegativity shift.

    Groups terms by qubit subset M; when any weight in a group is negative
    (or whenever smoothing is on, for tau-stability) the group is expanded
    over all bitstrings with a common shift c_M, recorded as an energy shift.
    """
    groups: dict[tuple[int, ...], dict[int, float]] = {}
    for (subset, x, p) in H.k_local_diagonal:
        groups.setdefault(subset, {})[x] = groups.get(subset, {}).get(x, 0.0) + p
    projs: list[tuple[frozenset[int], float]] = []
    shift = 0.0

    def s_nodes(subset, x) -> frozenset[int]:
        # b(i) for x_i = 0, t(i) for x_i = 1
        return frozenset((2 * q + 1) if not (x >> pos) & 1 else 2 * q
                         for pos, q in enumerate(subset))

    for subset, weights in sorted(groups.items()):
        need_shift = any(p < 0 for p in weights.values()) or p_min > 0.0
        if need_shift:
            c = sum(abs(p) for p in weights.values()) + p_min
            shift += c
            for x in range(1 << len(subset)):
                projs.append((s_nodes(subset, x), weights.get(x, 0.0) + c))
        else:
            for x, p in sorted(weights.items()):
                if p > 0.0:
                    projs.append((s_nodes(subset, x), p))
    return projs, shift


def reduce_stoqlh_to_hcbstar(H: StoqLhHamiltonian, params: ReductionParams,
                             forced_terms: Optional[Sequence[tuple[str, tuple[int, int]]]] = None
                             ) -> ReductionStep:
    """Dual-rail HCB* simulator for a (2,k)-local stoquastic Hamiltonian.

    Qubits become node pairs (t(i), b(i)); HOP+/HOP- elementary terms get one
    hop ancilla each and a third-order gadget; X-projector terms become
    controlled hops in V_extra; diagonal terms ride along on the b-rail.
    """
    eps_t, eta_t = params.eps_step, params.eta_step
    n = H.qubit_count
    if n < 2:
        raise ValidationError("the dual-rail step expects at least two qubits")
    diag_table, elems = decompose_two_local_stoquastic(H)
    term_map: dict[tuple[str, tuple[int, int]], float] = {
        (t.kind, t.qubits): t.weight for t in elems}
    if forced_terms:
        for key in forced_terms:
            term_map.setdefault((str(key[0]), (int(key[1][0]), int(key[1][1]))), 0.0)
    p_min = _auto_p_min(params, max(len(term_map), len(H.k_local_diagonal)))
    smoothing_error = 0.0
    terms: list[ElementaryTerm] = []
    for (kind, pair), w in sorted(term_map.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        w_s = _smooth(w, p_min)
        smoothing_error += w_s - w
        terms.append(ElementaryTerm(kind, pair, w_s))
    hop_terms = [t for t in terms if t.kind.startswith("HOP")]
    x_terms = [t for t in terms if not t.kind.startswith("HOP")]

    def t_node(i):
        return 2 * i

    def b_node(i):
        return 2 * i + 1

    anc = {id(t): 2 * n + k for k, t in enumerate(hop_terms)}
    n_sim = 2 * n + len(hop_terms)
    edges: set[tuple[int, int]] = set()
    vm_hops: dict[tuple[int, int], float] = {}
    vm_controlled: dict[tuple[int, tuple[int, int]], float] = {}
    vt_pairs: dict[tuple[int, int], float] = {}
    ve_controlled: dict[tuple[int, tuple[int, int]], float] = {}

    def add_edge(u, v):
        edges.add((u, v) if u < v else (v, u))

    for t in hop_terms:
        i, j = t.qubits
        a = anc[id(t)]
        p13 = t.weight ** (1.0 / 3.0)
        p23 = t.weight ** (2.0 / 3.0)
        if t.kind == "HOP+":
            hop_j, ctrl_edge = t_node(j), (b_node(i), b_node(j))
            heavy, light1, light2 = ((t_node(i), t_node(j)),
                                     (t_node(i), b_node(j)), (b_node(i), t_node(j)))
        else:  # HOP-: second qubit conjugated by X, i.e. its rails swapped
            hop_j, ctrl_edge = b_node(j), (b_node(i), t_node(j))
            heavy, light1, light2 = ((t_node(i), b_node(j)),
                                     (t_node(i), t_node(j)), (b_node(i), b_node(j)))
        for (u, v) in ((t_node(i), a), (hop_j, a), ctrl_edge):
            add_edge(u, v)
        _merge(vm_hops, {(t_node(i), a): p13, (hop_j, a): p13})
        vm_controlled[(a, ctrl_edge)] = p13
        _merge(vt_pairs, {heavy: 2.0 * p23, light1: p23, light2: p23})
    for t in x_terms:
        i, j = t.qubits
        if t.kind in ("X0", "X1"):
            hop_q, ctrl = i, (t_node(j) if t.kind == "X0" else b_node(j))
        else:
            hop_q, ctrl = j, (t_node(i) if t.kind == "0X" else b_node(i))
        e = (t_node(hop_q), b_node(hop_q))
        add_edge(*e)
        key = (ctrl, e)
        ve_controlled[key] = ve_controlled.get(key, 0.0) + t.weight

    ve_chem: dict[int, float] = {}
    ve_pair: dict[tuple[int, int], float] = {}
    shift = diag_table.get((), 0.0)
    for key, val in diag_table.items():
        if len(key) == 1:
            ve_chem[b_node(key[0])] = ve_chem.get(b_node(key[0]), 0.0) + val
        elif len(key) == 2:
            _merge(ve_pair, {(b_node(key[0]), b_node(key[1])): val})
    # The projector shift rewrites T_M exactly (weights and scalar move together),
    # so it does not perturb the target.
    projs, proj_shift = _projector_translation(H, p_min if H.k_local_diagonal else 0.0)
    shift += proj_shift

    graph = InteractionGraph.build(n_sim, edges)
    h0_tilde = HcbHamiltonian(graph, n, 1,
                              pair_potential={(t_node(i), b_node(i)): 1.0 for i in range(n)})
    order = 3 if hop_terms else 1
    h0 = HcbHamiltonian(graph, n, 1, chemical={a: 1.0 for a in anc.values()})
    v_main = HcbHamiltonian(graph, n, 1, hopping=vm_hops,
                            controlled_hopping=vm_controlled) if hop_terms else None
    v_tilde = HcbHamiltonian(graph, n, 1, pair_potential=vt_pairs) if hop_terms else None
    v_extra = HcbHamiltonian(graph, n, 1, controlled_hopping=ve_controlled,
                             chemical=ve_chem, pair_potential=ve_pair,
                             projector_terms=tuple(projs), energy_shift=shift)

    sector_bound = math.comb(n_sim, n)
    num_basis = _numeric_sector(lambda: _dual_rail_sector(graph, n),
                                sector_bound, params.verify_cap)
    lam = max(_piece_norm(v_main, num_basis), _piece_norm(v_extra, num_basis),
              _piece_norm(v_tilde, num_basis))
    saturated = False
    if order == 1:
        # No hop ancillas: the rail penalty is the only layer, first order.
        delta = 1.0
        if params.explicit_delta_tilde is not None:
            delta_tilde = params.explicit_delta_tilde
        elif params.delta_mode == "explicit":
            delta_tilde = params.explicit_delta
        else:
            delta_tilde, saturated = _select_delta(1, lam, eps_t, eta_t, 'stoqlh_to_hcbstar')
        scale23 = 0.0
    else:
        if params.delta_mode == "explicit":
            delta = params.explicit_delta
        else:
            delta, saturated = _select_delta(3, lam, eps_t / 2, eta_t / 2, 'stoqlh_to_hcbstar')
        scale23 = delta ** (2.0 / 3.0)
        if params.explicit_delta_tilde is not None:
            delta_tilde = params.explicit_delta_tilde
        else:
            inner_norm = (delta * len(anc) + scale23 * _piece_norm(v_main, None)
                          + delta ** (1.0 / 3.0) * _piece_norm(v_tilde, None)
                          + _piece_norm(v_extra, None))
            leak = scale23 * sum(vm_hops.values())
            delta_tilde, sat2 = _select_delta_tilde(inner_norm, leak, eps_t / 2, eta_t / 2,
                                                    direct_leakage=False)
            saturated = saturated or sat2

    hop_total = {k: scale23 * v for k, v in vm_hops.items()}
    controlled_total = {k: scale23 * v for k, v in vm_controlled.items()}
    _merge(controlled_total, ve_controlled)
    chem_total = {a: delta for a in anc.values()}
    _merge(chem_total, ve_chem)
    pair_total = {(t_node(i), b_node(i)): delta_tilde for i in range(n)}
    _merge(pair_total, vt_pairs, delta ** (1.0 / 3.0))
    _merge(pair_total, ve_pair)
    simulator = HcbHamiltonian(graph, n, 1, hopping=hop_total,
                               controlled_hopping=controlled_total,
                               chemical=chem_total, pair_potential=pair_total,
                               projector_terms=tuple(projs), energy_shift=shift)
    simulator, clamped = _clamp_model(simulator)

    def config_map(x: int) -> int:
        mask = 0
        for i in range(n):
            mask |= 1 << (2 * i + ((x >> i) & 1))
        return mask

    minus_masks = [config_map(x) for x in range(1 << n)]
    if order == 3:
        def gadget_builder(cap: int) -> GadgetView:
            basis = _dual_rail_sector(graph, n, cap)
            return _make_view(3, delta, basis, minus_masks,
                              _not_on(basis, set(anc.values())),
                              h0, v_main, v_extra, v_tilde)
    else:
        def gadget_builder(cap: int) -> GadgetView:
            basis = enumerate_sparse_subsets(graph, n, 1, cap)
            logical = set(minus_masks)
            return _make_view(1, delta_tilde, basis, minus_masks,
                              lambda mask: mask in logical,
                              h0_tilde, None, v_extra, None)

    effective = None
    if smoothing_error:
        recon = reconstruct(diag_table, terms, n)
        effective = replace(recon, k_local_diagonal=H.k_local_diagonal,
                            locality_k=H.locality_k)
    return ReductionStep(
        name="stoqlh_to_hcbstar", target=H, simulator=simulator,
        delta=delta, delta_tilde=delta_tilde, budget=(eta_t, eps_t),
        encoding_kind="basis-map", config_map=config_map,
        gadget_builder=gadget_builder,
        encoding_builder=_basis_map_encoding(H, simulator, config_map),
        effective_target=effective,
        notes={"order": order, "lambda": lam, "norm_estimated": num_basis is None,
               "delta_saturated": saturated, "coefficients_clamped": clamped,
               "smoothing_error": smoothing_error, "p_min": p_min,
               "hop_terms": len(hop_terms), "x_terms": len(x_terms),
               "expected_nodes": 2 * n + len(hop_terms)})


def _dual_rail_sector(graph: InteractionGraph, n_qubits: int,
                      cap: int = DEFAULT_DIMENSION_CAP) -> BasisSpace:
    """Configurations of n particles with at most one per (t(i), b(i)) pair."""
    if math.comb(graph.node_count, n_qubits) > 64 * cap:
        raise ScaleInfeasibleError("dual-rail sector too large to enumerate")
    full = enumerate_sparse_subsets(graph, n_qubits, 1, cap=None)

    def ok(mask: int) -> bool:
        for i in range(n_qubits):
            if (mask >> (2 * i)) & 1 and (mask >> (2 * i + 1)) & 1:
                return False
        return True

    basis = enumerate_filtered(full, ok, mode="dual-rail-sector")
    if basis.dimension > cap:
        raise ScaleInfeasibleError(f"sector dimension {basis.dimension} exceeds cap {cap}")
    return basis


def _not_on(basis: BasisSpace, nodes: set[int]) -> Callable[[int], bool]:
    forbidden = 0
    for u in nodes:
        forbidden |= 1 << u
    return lambda mask: (mask & forbidden) == 0


def _make_view(order: int, delta: float, basis: BasisSpace,
               minus_masks: Sequence[int], minus_pred: Callable[[int], bool],
               h0: ModelHamiltonian, v_main, v_extra, v_tilde) -> GadgetView:
    minus_set = [i for i, c in enumerate(basis.configurations) if minus_pred(c)]
    split = BlockSplit.from_minus(minus_set, basis.dimension)
    pos_of_sector_index = {si: k for k, si in enumerate(split.minus_indices)}
    try:
        positions = tuple(pos_of_sector_index[basis.index_of[m]] for m in minus_masks)
    except KeyError as exc:
        raise ValidationError(f"encoded configuration outside the gadget sector: {exc}")
    if len(positions) != len(split.minus_indices):
        raise ValidationError("minus block does not match the encoded target space")
    return GadgetView(
        order=order, delta=delta, basis=basis, split=split,
        h0=build_matrix(h0, basis),
        v_main=build_matrix(v_main, basis) if v_main is not None else None,
        v_extra=build_matrix(v_extra, basis) if v_extra is not None else None,
        v_tilde_extra=build_matrix(v_tilde, basis) if v_tilde is not None else None,
        minus_position_of_target=positions)


# ---------------------------------------------------------------------------
# HCB* -> HCB_1 (controlled hopping elimination)
# ---------------------------------------------------------------------------

def reduce_hcbstar_to_hcb1(H: HcbHamiltonian, params: ReductionParams) -> ReductionStep:
    """Replace each controlled hop -t n_c W_{u,v} by an ancilla two-hop gadget."""
    if H.range_ != 1:
        raise ValidationError("controlled-hopping elimination expects a range-1 model")
    eps_t, eta_t = params.eps_step, params.eta_step
    n = H.n
    triples = sorted(H.controlled_hopping.items())
    if not triples:
        sim = replace(H)
        ident = lambda mask: mask
        return ReductionStep(
            name="hcbstar_to_hcb1", target=H, simulator=sim, delta=1.0, delta_tilde=None,
            budget=(eta_t, eps_t), encoding_kind="basis-map", config_map=ident,
            gadget_builder=None, encoding_builder=_basis_map_encoding(H, sim, ident),
            notes={"order": 1, "controlled_terms": 0, "expected_nodes": n})

    anc = {key: n + k for k, (key, _) in enumerate(triples)}
    edges = set(H.graph.edges)
    for (c, (u, v)), a in ((key, anc[key]) for key, _ in triples):
        edges.add((u, a) if u < a else (a, u))
        edges.add((v, a) if v < a else (a, v))
    graph = InteractionGraph.build(n + len(triples), edges)
    m = H.particle_count

    h0_tilde = HcbHamiltonian(graph, m, 1,
                              chemical={anc[key]: 1.0 for key, _ in triples},
                              pair_potential={tuple(sorted((key[0], anc[key]))): -1.0
                                              for key, _ in triples})
    h0 = HcbHamiltonian(graph, m, 1, chemical={anc[key]: 1.0 for key, _ in triples})
    vm_hops: dict[tuple[int, int], float] = {}
    ve_pair: dict[tuple[int, int], float] = {}
    for (c, (u, v)), t in triples:
        a = anc[(c, (u, v))]
        rt = math.sqrt(t)
        _merge(vm_hops, {tuple(sorted((u, a))): rt, tuple(sorted((v, a))): rt})
        _merge(ve_pair, {tuple(sorted((c, u))): t, tuple(sorted((c, v))): t})
    v_main = HcbHamiltonian(graph, m, 1, hopping=vm_hops)
    bos_pair = dict(H.pair_potential)
    _merge(bos_pair, ve_pair)
    v_extra = HcbHamiltonian(graph, m, 1, hopping=dict(H.hopping),
                             chemical=dict(H.chemical), pair_potential=bos_pair,
                             projector_terms=H.projector_terms,
                             energy_shift=H.energy_shift)

    sector_bound = math.comb(graph.node_count, m)
    num_basis = _numeric_sector(lambda: _controlled_sector(graph, m, triples, anc),
                                sector_bound, params.verify_cap)
    lam = max(_piece_norm(v_main, num_basis), _piece_norm(v_extra, num_basis))
    saturated = False
    if params.delta_mode == "explicit":
        delta = params.explicit_delta
    else:
        delta, saturated = _select_delta(2, lam, eps_t / 2, eta_t / 2, 'hcbstar_to_hcb1')
    if params.explicit_delta_tilde is not None:
        delta_tilde = params.explicit_delta_tilde
    else:
        leak = math.sqrt(delta) * sum(vm_hops.values())
        inner_norm = delta * len(triples) + math.sqrt(delta) * sum(vm_hops.values()) \
            + coefficient_norm_bound(v_extra)
        delta_tilde, sat2 = _select_delta_tilde(inner_norm, leak, eps_t / 2, eta_t / 2)
        saturated = saturated or sat2

    chem_total = {anc[key]: delta + delta_tilde for key, _ in triples}
    _merge(chem_total, H.chemical)
    pair_total = {tuple(sorted((key[0], anc[key]))): -delta_tilde for key, _ in triples}
    _merge(pair_total, bos_pair)
    hop_total = {k: math.sqrt(delta) * v for k, v in vm_hops.items()}
    _merge(hop_total, H.hopping)
    simulator = HcbHamiltonian(graph, m, 1, hopping=hop_total, chemical=chem_total,
                               pair_potential=pair_total, projector_terms=H.projector_terms,
                               energy_shift=H.energy_shift)
    simulator, clamped = _clamp_model(simulator)

    ident = lambda mask: mask
    anc_nodes = set(anc.values())

    def gadget_builder(cap: int) -> GadgetView:
        basis = _controlled_sector(graph, m, triples, anc, cap)
        minus_masks = list(enumerate_basis(H, cap).configurations)
        return _make_view(2, delta, basis, minus_masks, _not_on(basis, anc_nodes),
                          h0, v_main, v_extra, None)

    return ReductionStep(
        name="hcbstar_to_hcb1", target=H, simulator=simulator, delta=delta,
        delta_tilde=delta_tilde, budget=(eta_t, eps_t), encoding_kind="basis-map",
        config_map=ident, gadget_builder=gadget_builder,
        encoding_builder=_basis_map_encoding(H, simulator, ident),
        notes={"order": 2, "lambda": lam, "norm_estimated": num_basis is None,
               "delta_saturated": saturated, "coefficients_clamped": clamped,
               "controlled_terms": len(triples), "expected_nodes": n + len(triples)})


def _controlled_sector(graph: InteractionGraph, m: int, triples, anc,
                       cap: int = DEFAULT_DIMENSION_CAP) -> BasisSpace:
    """Configurations where each gadget ancilla is occupied only if its control is."""
    if math.comb(graph.node_count, m) > 64 * cap:
        raise ScaleInfeasibleError("controlled sector too large to enumerate")
    full = enumerate_sparse_subsets(graph, m, 1, cap=None)
    pairs = [(anc[key], key[0]) for key, _ in triples]

    def ok(mask: int) -> bool:
        return all(not ((mask >> a) & 1 and not (mask >> c) & 1) for (a, c) in pairs)

    basis = enumerate_filtered(full, ok, mode="controlled-sector")
    if basis.dimension > cap:
        raise ScaleInfeasibleError(f"sector dimension {basis.dimension} exceeds cap {cap}")
    return basis


# ---------------------------------------------------------------------------
# HCB_1 -> HCB_2 (edge subdivision)
# ---------------------------------------------------------------------------

def reduce_hcb1_to_hcb2(H: HcbHamiltonian, params: ReductionParams) -> ReductionStep:
    """Subdivide every edge with a midpoint node; hops become two-step moves."""
    if H.range_ != 1 or H.has_controlled_hopping():
        raise ValidationError("subdivision expects a range-1 model without controlled hops")
    eps_t, eta_t = params.eps_step, params.eta_step
    n, m = H.n, H.particle_count
    old_edges = sorted(H.graph.edges)
    mid = {e: n + k for k, e in enumerate(old_edges)}
    edges = set()
    for (u, v) in old_edges:
        edges.add(tuple(sorted((u, mid[(u, v)]))))
        edges.add(tuple(sorted((v, mid[(u, v)]))))
    graph = InteractionGraph.build(n + len(old_edges), edges)

    h0 = HcbHamiltonian(graph, m, 2, chemical={w: 1.0 for w in mid.values()})
    vm_hops: dict[tuple[int, int], float] = {}
    ve_chem: dict[int, float] = {}
    ve_pair: dict[tuple[int, int], float] = dict(H.pair_potential)
    for e in old_edges:
        t = H.hopping.get(e, 0.0)
        if t == 0.0:
            continue
        rt = math.sqrt(t)
        u, v = e
        w = mid[e]
        _merge(vm_hops, {tuple(sorted((u, w))): rt, tuple(sorted((v, w))): rt})
        ve_chem[u] = ve_chem.get(u, 0.0) + t
        ve_chem[v] = ve_chem.get(v, 0.0) + t
        _merge(ve_pair, {e: -2.0 * t})
    _merge(ve_chem, H.chemical)
    v_main = HcbHamiltonian(graph, m, 2, hopping=vm_hops)
    v_extra = HcbHamiltonian(graph, m, 2, chemical=ve_chem, pair_potential=ve_pair,
                             projector_terms=H.projector_terms, energy_shift=H.energy_shift)

    sector_bound = math.comb(graph.node_count, m)
    num_basis = _numeric_sector(lambda: enumerate_sparse_subsets(graph, m, 2, params.verify_cap),
                                sector_bound, params.verify_cap)
    lam = max(_piece_norm(v_main, num_basis), _piece_norm(v_extra, num_basis))
    if params.delta_mode == "explicit":
        delta, saturated = params.explicit_delta, False
    else:
        delta, saturated = _select_delta(2, lam, eps_t, eta_t, 'hcb1_to_hcb2')

    chem_total = {w: delta for w in mid.values()}
    _merge(chem_total, ve_chem)
    hop_total = {k: math.sqrt(delta) * v for k, v in vm_hops.items()}
    simulator = HcbHamiltonian(graph, m, 2, hopping=hop_total, chemical=chem_total,
                               pair_potential=ve_pair, projector_terms=H.projector_terms,
                               energy_shift=H.energy_shift)
    simulator, clamped = _clamp_model(simulator)

    ident = lambda mask: mask
    mids = set(mid.values())

    def gadget_builder(cap: int) -> GadgetView:
        basis = enumerate_sparse_subsets(graph, m, 2, cap)
        minus_masks = list(enumerate_basis(H, cap).configurations)
        return _make_view(2, delta, basis, minus_masks, _not_on(basis, mids),
                          h0, v_main, v_extra, None)

    return ReductionStep(
        name="hcb1_to_hcb2", target=H, simulator=simulator, delta=delta, delta_tilde=None,
        budget=(eta_t, eps_t), encoding_kind="basis-map", config_map=ident,
        gadget_builder=gadget_builder,
        encoding_builder=_basis_map_encoding(H, simulator, ident),
        notes={"order": 2, "lambda": lam, "norm_estimated": num_basis is None,
               "delta_saturated": saturated, "coefficients_clamped": clamped,
               "expected_nodes": n + len(old_edges)})


# ---------------------------------------------------------------------------
# enhanced HCB_2 (projector terms) -> plain HCB_2
# ---------------------------------------------------------------------------

def reduce_multiparticle_to_hcb2(H: HcbHamiltonian, params: ReductionParams) -> ReductionStep:
    """Eliminate -p prod(I - n_u) interactions with an (a, b) ancilla pair each."""
    if H.range_ != 2:
        raise ValidationError("multi-particle elimination expects a range-2 model")
    if H.has_controlled_hopping():
        raise ValidationError("controlled hops must be eliminated before this step")
    eps_t, eta_t = params.eps_step, params.eta_step
    n, m = H.n, H.particle_count
    projs = sorted(H.projector_terms, key=lambda kv: (sorted(kv[0]), kv[1]))
    d = len(projs)
    a_of = [n + 2 * k for k in range(d)]
    b_of = [n + 2 * k + 1 for k in range(d)]
    edges = set(H.graph.edges)
    for k, (S, _) in enumerate(projs):
        edges.add((a_of[k], b_of[k]))
        for u in sorted(S):
            edges.add(tuple(sorted((u, b_of[k]))))
    graph = InteractionGraph.build(n + 2 * d, edges)
    m_sim = m + d

    h0 = HcbHamiltonian(graph, m_sim, 2, chemical={a: -1.0 for a in a_of},
                        energy_shift=float(d))
    vm_hops = {(a_of[k], b_of[k]): math.sqrt(p) for k, (_, p) in enumerate(projs) if p > 0.0}
    v_main = HcbHamiltonian(graph, m_sim, 2, hopping=vm_hops)
    v_extra = HcbHamiltonian(graph, m_sim, 2, hopping=dict(H.hopping),
                             chemical=dict(H.chemical), pair_potential=dict(H.pair_potential),
                             energy_shift=H.energy_shift)

    sector_bound = math.comb(graph.node_count, m_sim)
    num_basis = _numeric_sector(lambda: enumerate_sparse_subsets(graph, m_sim, 2, params.verify_cap),
                                sector_bound, params.verify_cap)
    lam = max(_piece_norm(v_main, num_basis), _piece_norm(v_extra, num_basis))
    if params.delta_mode == "explicit":
        delta, saturated = params.explicit_delta, False
    else:
        delta, saturated = _select_delta(2, lam, eps_t, eta_t, 'multi_to_hcb2')

    chem_total = {a: -delta for a in a_of}
    _merge(chem_total, H.chemical)
    hop_total = {k: math.sqrt(delta) * v for k, v in vm_hops.items()}
    _merge(hop_total, H.hopping)
    simulator = HcbHamiltonian(graph, m_sim, 2, hopping=hop_total, chemical=chem_total,
                               pair_potential=dict(H.pair_potential),
                               energy_shift=H.energy_shift + delta * d)
    simulator, clamped = _clamp_model(simulator)

    anc_mask = sum(1 << a for a in a_of)
    config_map = lambda mask: mask | anc_mask

    def minus_pred(mask: int) -> bool:
        return (mask & anc_mask) == anc_mask

    def gadget_builder(cap: int) -> GadgetView:
        basis = enumerate_sparse_subsets(graph, m_sim, 2, cap)
        minus_masks = [config_map(c) for c in enumerate_basis(H, cap).configurations]
        return _make_view(2, delta, basis, minus_masks, minus_pred,
                          h0, v_main, v_extra, None)

    return ReductionStep(
        name="multi_to_hcb2", target=H, simulator=simulator, delta=delta, delta_tilde=None,
        budget=(eta_t, eps_t), encoding_kind="basis-map", config_map=config_map,
        gadget_builder=gadget_builder,
        encoding_builder=_basis_map_encoding(H, simulator, config_map),
        notes={"order": 2, "lambda": lam, "norm_estimated": num_basis is None,
               "delta_saturated": saturated, "coefficients_clamped": clamped,
               "projector_terms": d, "expected_nodes": n + 2 * d,
               "expected_particles": m + d})


# ---------------------------------------------------------------------------
# HCB_2 -> HCD (dimer embedding)
# ---------------------------------------------------------------------------

def reduce_hcb2_to_hcd(H: HcbHamiltonian, params: ReductionParams) -> ReductionStep:
    """Represent each particle by a hanging dimer; hops become triple moves.

    Hopping amplitudes are floored at eps_t / (2 |E|) so the per-midpoint
    penalties sqrt(t_max / t_e) stay finite; the induced perturbation of the
    target is recorded in the notes and counts against the step budget.
    """
    if H.range_ != 2 or H.has_controlled_hopping():
        raise ValidationError("dimer embedding expects a plain range-2 model")
    if H.projector_terms:
        raise ValidationError("projector terms must be absorbed before the dimer embedding")
    eps_t, eta_t = params.eps_step, params.eta_step
    n, m = H.n, H.particle_count
    old_edges = sorted(H.graph.edges)
    if not old_edges:
        raise ValidationError("dimer embedding needs at least one edge")
    floor = eps_t / (2.0 * len(old_edges))
    hop = {e: max(H.hopping.get(e, 0.0), floor) for e in old_edges}
    floor_error = sum(hop[e] - H.hopping.get(e, 0.0) for e in old_edges)
    t_max = max(hop.values())

    star = {u: n + u for u in range(n)}
    mid = {e: 2 * n + k for k, e in enumerate(old_edges)}
    edges = set()
    for u in range(n):
        edges.add((u, star[u]))
    for (u, v) in old_edges:
        w = mid[(u, v)]
        edges.add(tuple(sorted((u, w))))
        edges.add(tuple(sorted((v, w))))
    graph = InteractionGraph.build(2 * n + len(old_edges), edges)

    h0 = HcdHamiltonian(graph, m, 0.0,
                        chemical={mid[e]: math.sqrt(t_max / hop[e]) for e in old_edges})
    v_main = HcdHamiltonian(graph, m, t_max ** (1.0 / 3.0))
    neigh: dict[int, list[tuple[int, float]]] = {u: [] for u in range(n)}
    for (u, v) in old_edges:
        neigh[u].append((v, hop[(u, v)]))
        neigh[v].append((u, hop[(u, v)]))
    d1 = {u: sum(math.sqrt(t) for _, t in neigh[u]) / math.sqrt(t_max) for u in range(n)}
    d2 = {u: sum(math.sqrt(ta * tb) for (va, ta) in neigh[u] for (vb, tb) in neigh[u]
                 if va != vb) / t_max for u in range(n)}
    v_tilde = HcdHamiltonian(graph, m, 0.0,
                             chemical={u: t_max ** (2.0 / 3.0) * d1[u]
                                       for u in range(n) if d1[u] != 0.0})
    ve_chem = {u: t_max * d2[u] for u in range(n) if d2[u] != 0.0}
    _merge(ve_chem, H.chemical)
    v_extra = HcdHamiltonian(graph, m, 0.0, chemical=ve_chem,
                             pair_potential=dict(H.pair_potential),
                             energy_shift=H.energy_shift)

    num_basis = _numeric_sector(
        lambda: enumerate_basis(HcdHamiltonian(graph, m, 0.0), params.verify_cap),
        math.comb(len(edges), m), params.verify_cap)
    lam = max(_piece_norm(v_main, num_basis), _piece_norm(v_extra, num_basis),
              _piece_norm(v_tilde, num_basis))
    if params.delta_mode == "explicit":
        delta, saturated = params.explicit_delta, False
    else:
        delta, saturated = _select_delta(3, lam, eps_t, eta_t, 'hcb2_to_hcd')

    chem_total = {mid[e]: delta * math.sqrt(t_max / hop[e]) for e in old_edges}
    for u in range(n):
        val = delta ** (1.0 / 3.0) * t_max ** (2.0 / 3.0) * d1[u] + t_max * d2[u]
        if val:
            chem_total[u] = chem_total.get(u, 0.0) + val
    _merge(chem_total, H.chemical)
    simulator = HcdHamiltonian(graph, m, delta ** (2.0 / 3.0) * t_max ** (1.0 / 3.0),
                               chemical=chem_total, pair_potential=dict(H.pair_potential),
                               energy_shift=H.energy_shift)
    simulator, clamped = _clamp_model(simulator)

    def config_map(mask: int) -> int:
        out = mask
        for u in mask_nodes(mask):
            out |= 1 << star[u]
        return out

    mids = set(mid.values())
    effective = replace(H, hopping=hop) if floor_error else None

    def gadget_builder(cap: int) -> GadgetView:
        basis = enumerate_basis(HcdHamiltonian(graph, m, 0.0), cap)
        minus_masks = [config_map(c) for c in enumerate_basis(H, cap).configurations]
        return _make_view(3, delta, basis, minus_masks, _not_on(basis, mids),
                          h0, v_main, v_extra, v_tilde)

    return ReductionStep(
        name="hcb2_to_hcd", target=H, simulator=simulator, delta=delta, delta_tilde=None,
        budget=(eta_t, eps_t), encoding_kind="basis-map", config_map=config_map,
        gadget_builder=gadget_builder,
        encoding_builder=_basis_map_encoding(H, simulator, config_map),
        effective_target=effective,
        notes={"order": 3, "lambda": lam, "norm_estimated": num_basis is None,
               "delta_saturated": saturated, "coefficients_clamped": clamped,
               "floor_error": floor_error, "hop_floor": floor,
               "expected_nodes": 2 * n + len(old_edges)})


# ---------------------------------------------------------------------------
# HCD -> TIM
# ---------------------------------------------------------------------------

def reduce_hcd_to_tim(H: HcdHamiltonian, params: ReductionParams) -> ReductionStep:
    """TIM simulator on the same node set: a particle-number restriction layer
    followed by a second-order transverse-field gadget over the dimer penalty."""
    eps_t, eta_t = params.eps_step, params.eta_step
    n, m = H.n, H.dimer_count
    G = H.graph
    edges = sorted(G.edges)
    gamma = 2.0 * len(edges) + 1.0
    dist2 = [(u, v) for u in range(n) for v in range(u + 1, n) if G.distance(u, v) == 2]
    t = H.hopping

    # Inner penalty: N_U - 2 N_E + Gamma * sum_{D(u,v)=2} n_u n_v  (dimer ground states)
    h0_pair = {e: -2.0 for e in edges}
    _merge(h0_pair, {p: gamma for p in dist2})
    h0 = TimHamiltonian(G, {}, {u: 1.0 for u in range(n)}, h0_pair, form="occupation")
    v_main = TimHamiltonian(G, {u: math.sqrt(t) for u in range(n)}, {}, {}, form="occupation")
    ve_chem = {u: t for u in range(n)}
    _merge(ve_chem, H.chemical)
    v_extra = TimHamiltonian(G, {}, ve_chem, dict(H.pair_potential),
                             H.energy_shift, form="occupation")
    # Outer penalty: (N_U - 2m)(N_U - 2m + 1) restricts to 2m / 2m-1 particles
    h0_tilde = TimHamiltonian(
        InteractionGraph.build(n, []), {},
        {u: 2.0 - 4.0 * m for u in range(n)},
        {(u, v): 2.0 for u in range(n) for v in range(u + 1, n)},
        2.0 * m * (2.0 * m - 1.0), form="occupation")

    window_bound = math.comb(n, 2 * m) + math.comb(n, 2 * m - 1)
    num_basis = _numeric_sector(lambda: enumerate_particle_window(G, (2 * m, 2 * m - 1),
                                                                  params.verify_cap),
                                window_bound, params.verify_cap)
    lam = max(_piece_norm(v_main, num_basis), _piece_norm(v_extra, num_basis))
    saturated = False
    if params.delta_mode == "explicit":
        delta = params.explicit_delta
    else:
        delta, saturated = _select_delta(2, lam, eps_t / 2, eta_t / 2, 'hcd_to_tim')
    if params.explicit_delta_tilde is not None:
        delta_tilde = params.explicit_delta_tilde
    else:
        inner_norm = (delta * (n + 2 * len(edges) + gamma * len(dist2))
                      + math.sqrt(delta) * math.sqrt(t) * n + coefficient_norm_bound(v_extra))
        leak = math.sqrt(delta) * math.sqrt(t) * n
        delta_tilde, sat2 = _select_delta_tilde(inner_norm, leak, eps_t / 2, eta_t / 2)
        saturated = saturated or sat2

    chem_total = {u: delta_tilde * (2.0 - 4.0 * m) + delta + ve_chem.get(u, 0.0)
                  for u in range(n)}
    pair_total = {(u, v): 2.0 * delta_tilde for u in range(n) for v in range(u + 1, n)}
    _merge(pair_total, {e: -2.0 * delta for e in edges})
    _merge(pair_total, {p: delta * gamma for p in dist2})
    _merge(pair_total, H.pair_potential)
    simulator = TimHamiltonian(
        InteractionGraph.build(n, [k for k, v in pair_total.items() if v != 0.0]),
        {u: math.sqrt(delta) * math.sqrt(t) for u in range(n)}, chem_total,
        pair_total, H.energy_shift + delta_tilde * 2.0 * m * (2.0 * m - 1.0),
        form="occupation")
    simulator, clamped = _clamp_model(simulator)

    ident = lambda mask: mask

    def gadget_builder(cap: int) -> GadgetView:
        basis = enumerate_particle_window(G, (2 * m, 2 * m - 1), cap)
        minus_masks = list(enumerate_basis(H, cap).configurations)
        dimer_masks = set(minus_masks)
        return _make_view(2, delta, basis, minus_masks,
                          lambda mask: mask in dimer_masks,
                          h0, v_main, v_extra, None)

    return ReductionStep(
        name="hcd_to_tim", target=H, simulator=simulator, delta=delta,
        delta_tilde=delta_tilde, budget=(eta_t, eps_t), encoding_kind="basis-map",
        config_map=ident, gadget_builder=gadget_builder,
        encoding_builder=_basis_map_encoding(H, simulator, ident),
        notes={"order": 2, "lambda": lam, "norm_estimated": num_basis is None,
               "delta_saturated": saturated, "coefficients_clamped": clamped,
               "gamma": gamma, "expected_nodes": n})


# ---------------------------------------------------------------------------
# TIM -> degree-3 TIM (chain encoding)
# ---------------------------------------------------------------------------

def reduce_tim_to_degree3(H: TimHamiltonian, params: ReductionParams) -> ReductionStep:
    """Encode each qubit into a ferromagnetic chain arranged on a grid.

    The simulator couples qubit (u, v) only to its chain neighbors and to
    (v, u), so every ZZ degree is at most 3.  Transverse fields are generated
    by the chain splitting; longitudinal couplings are rescaled by the chain
    form factor.
    """
    eps_t, eta_t = params.eps_step, params.eta_step
    P = occupation_to_pauli(H)
    n = P.n
    framed, flipped = _x_sign_frame(P)
    hx_floor = eps_t / (2.0 * n)
    hx = {u: max(-framed.transverse.get(u, 0.0), hx_floor) for u in range(n)}
    floor_error = sum(hx[u] - max(0.0, -framed.transverse.get(u, 0.0)) for u in range(n))
    J = framed.interaction_strength()

    chain_saturated = False
    if params.chain_exponent is not None:
        m_chain = params.chain_length or max(n, 2)
        chain = ChainParams.from_exponent(m_chain, params.chain_exponent)
    else:
        try:
            chain = select_chain_parameters(n, max(J, hx_floor), eps_t, eta_t,
                                            length=params.chain_length)
        except UnreachableTargetError:
            if not params.allow_saturation:
                raise
            chain = select_chain_parameters(n, max(J, hx_floor), eps_t, eta_t,
                                            length=params.chain_length,
                                            allow_saturation=True)
            chain_saturated = True
    if chain.length < n:
        raise ValidationError("chain length must be at least the logical qubit count")
    m_chain, g = chain.length, chain.coupling
    delta_chain = chain_splitting(chain)
    xi = chain_xi(chain)
    e0, e1, _ = chain_energies(chain)

    def q(u: int, i: int) -> int:
        return u * m_chain + i

    transverse: dict[int, float] = {}
    ising: dict[tuple[int, int], float] = {}
    longitudinal: dict[int, float] = {}
    inv_delta = 1.0 / delta_chain
    for u in range(n):
        scale = hx[u] * inv_delta
        for i in range(m_chain):
            transverse[q(u, i)] = transverse.get(q(u, i), 0.0) - scale
            e = tuple(sorted((q(u, i), q(u, (i + 1) % m_chain))))
            ising[e] = ising.get(e, 0.0) - scale * g
    for (u, v), w in framed.ising.items():
        e = tuple(sorted((q(u, v), q(v, u))))
        ising[e] = ising.get(e, 0.0) + w / xi ** 2
    for u, gz in framed.longitudinal.items():
        longitudinal[q(u, 0)] = longitudinal.get(q(u, 0), 0.0) + gz / xi
    shift = framed.energy_shift - inv_delta * sum(hx.values()) * (e0 + e1) / 2.0
    graph = InteractionGraph.build(n * m_chain, [e for e, w in ising.items() if w != 0.0])
    simulator = TimHamiltonian(graph, transverse, longitudinal, ising, shift, form="pauli")
    simulator, clamped = _clamp_model(simulator)

    effective = None
    if flipped or floor_error:
        eff_tr = {u: -hx[u] for u in range(n)}
        effective = replace(framed, transverse=eff_tr)

    def encoding_builder(cap: int) -> Encoding:
        if (1 << (n * m_chain)) > cap:
            raise ScaleInfeasibleError("chain-tensor encoding exceeds the cap")
        states = [_chain_ground_pair(m_chain, g) for _ in range(n)]
        return Encoding.from_chains(states)

    delta_eff = min(hx.values()) * inv_delta  # times the chain gap, reported in notes
    return ReductionStep(
        name="tim_to_degree3", target=H, simulator=simulator,
        delta=delta_eff, delta_tilde=None, budget=(eta_t, eps_t),
        encoding_kind="chain-tensor", config_map=None, gadget_builder=None,
        encoding_builder=encoding_builder, effective_target=effective,
        notes={"order": 1, "chain_length": m_chain, "chain_coupling": g,
               "chain_exponent": chain.exponent, "chain_splitting": delta_chain,
               "chain_xi": xi, "frame_flipped": flipped, "floor_error": floor_error,
               "delta_saturated": chain_saturated, "coefficients_clamped": clamped,
               "max_zz_degree": simulator.max_zz_degree(),
               "degree3": simulator.is_degree3(),
               "expected_nodes": n * m_chain})


def _x_sign_frame(P: TimHamiltonian) -> tuple[TimHamiltonian, tuple[int, ...]]:
    """Z-conjugate qubits so every transverse coefficient is <= 0 (h^x >= 0)."""
    flipped = tuple(sorted(u for u, h in P.transverse.items() if h > 0))
    if not flipped:
        return P, ()
    tr = {u: (-h if u in flipped else h) for u, h in P.transverse.items()}
    return replace(P, transverse=tr), flipped


_chain_cache: dict[tuple[int, float], tuple[np.ndarray, np.ndarray]] = {}


def chain_ring_model(m: int, g: float) -> TimHamiltonian:
    """The periodic chain -g sum_j Z_j Z_{j+1} - sum_j X_j as a TIM model.

    At m = 2 the periodic sum doubles the single bond.
    """
    ising: dict[tuple[int, int], float] = {}
    for i in range(m):
        e = tuple(sorted((i, (i + 1) % m)))
        ising[e] = ising.get(e, 0.0) - g
    ring = InteractionGraph.build(m, ising.keys())
    return TimHamiltonian(ring, {i: -1.0 for i in range(m)}, {}, ising, form="pauli")


def _chain_ground_pair(m: int, g: float) -> tuple[np.ndarray, np.ndarray]:
    """(psi0, psi1) of the periodic chain, resolved by the spin-flip symmetry.

    psi0 carries X^(x)m = +1 with nonnegative amplitudes; psi1 carries -1 with
    the sign fixed so <psi1| Z_0 |psi0> > 0.
    """
    key = (m, round(g, 15))
    if key in _chain_cache:
        return _chain_cache[key]
    dense = build_matrix(chain_ring_model(m, g), enumerate_qubit_register(m)).to_dense()
    _, V = np.linalg.eigh(dense)
    dim = 1 << m
    span = V[:, :2]
    flip = span[::-1, :].copy()  # the global spin flip reverses the bitmask order
    plus = span + flip
    minus = span - flip
    col0 = plus[:, int(np.argmax(np.linalg.norm(plus, axis=0)))]
    col1 = minus[:, int(np.argmax(np.linalg.norm(minus, axis=0)))]
    psi0 = col0 / np.linalg.norm(col0)
    psi1 = col1 / np.linalg.norm(col1)
    if psi0.sum() < 0:
        psi0 = -psi0
    z0 = np.array([1.0 - 2.0 * (s & 1) for s in range(dim)])
    if psi1 @ (z0 * psi0) < 0:
        psi1 = -psi1
    _chain_cache[key] = (psi0, psi1)
    return psi0, psi1


# ---------------------------------------------------------------------------
# Chain composer
# ---------------------------------------------------------------------------

STOP_CLASSES = ("hcbstar", "hcb1", "hcb2", "hcd", "tim", "tim3")


def compose_chain(H: StoqLhHamiltonian, params: ReductionParams,
                  stop_at: str = "tim3",
                  forced_terms: Optional[Sequence[tuple[str, tuple[int, int]]]] = None,
                  explicit_per_step: Optional[Sequence[tuple[float, Optional[float]]]] = None
                  ) -> list[ReductionStep]:
    """Run the full reduction chain on a stoquastic target.

    Steps run in order StoqLH -> HCB* -> HCB_1 -> HCB_2 (-> projector
    elimination when k-local diagonal terms exist) -> HCD -> TIM -> degree-3
    TIM, each with budget (eta/2R, eps/2R).  Per-step class-membership and
    size assertions are checked as the chain unrolls.  ``forced_terms``
    stabilizes the dual-rail term set (path compilation); ``explicit_per_step``
    pins (delta, delta_tilde) per plan position.
    """
    if stop_at not in STOP_CLASSES:
        raise ValidationError(f"stop_at must be one of {STOP_CLASSES}")
    plan: list[str] = ["stoqlh_to_hcbstar"]
    if stop_at != "hcbstar":
        plan.append("hcbstar_to_hcb1")
    if stop_at not in ("hcbstar", "hcb1"):
        plan.append("hcb1_to_hcb2")
        if H.k_local_diagonal:
            plan.append("multi_to_hcb2")
    if stop_at in ("hcd", "tim", "tim3"):
        plan.append("hcb2_to_hcd")
    if stop_at in ("tim", "tim3"):
        plan.append("hcd_to_tim")
    if stop_at == "tim3":
        plan.append("tim_to_degree3")
    params = replace(params, steps_total=len(plan), allow_saturation=True)

    steps: list[ReductionStep] = []
    current: ModelHamiltonian = H
    for pos, name in enumerate(plan):
        p = params
        if explicit_per_step is not None:
            d, dt = explicit_per_step[pos]
            p = replace(params, delta_mode="explicit", explicit_delta=d,
                        explicit_delta_tilde=dt)
        if name == "stoqlh_to_hcbstar":
            step = reduce_stoqlh_to_hcbstar(current, p, forced_terms=forced_terms)
            _assert_class(step.simulator, ("hcbstar", "hcb"))
        elif name == "hcbstar_to_hcb1":
            step = reduce_hcbstar_to_hcb1(current, p)
            _assert_class(step.simulator, ("hcb",))
        elif name == "hcb1_to_hcb2":
            step = reduce_hcb1_to_hcb2(current, p)
            _assert_class(step.simulator, ("hcb",))
            if step.simulator.range_ != 2:
                raise ValidationError("subdivision must output a range-2 model")
        elif name == "multi_to_hcb2":
            step = reduce_multiparticle_to_hcb2(current, p)
            _assert_class(step.simulator, ("hcb",))
            if step.simulator.projector_terms:
                raise ValidationError("projector terms must be eliminated")
        elif name == "hcb2_to_hcd":
            step = reduce_hcb2_to_hcd(current, p)
            _assert_class(step.simulator, ("hcd",))
        elif name == "hcd_to_tim":
            step = reduce_hcd_to_tim(current, p)
            _assert_class(step.simulator, ("tim",))
        else:
            step = reduce_tim_to_degree3(current, p)
            _assert_class(step.simulator, ("tim",))
            if not step.simulator.is_degree3():
                raise ValidationError("degree-3 output violates its degree bound")
        _assert_sizes(step)
        steps.append(step)
        current = step.simulator
    return steps


def _assert_class(model: ModelHamiltonian, allowed: tuple[str, ...]) -> None:
    cls = model_class(model)
    if cls not in allowed:
        raise ValidationError(f"simulator class {cls} not in {allowed}")


def _assert_sizes(step: ReductionStep) -> None:
    n, m = model_sizes(step.simulator)
    expected = step.notes.get("expected_nodes")
    if expected is not None and n != expected:
        raise ValidationError(f"{step.name}: node count {n} != expected {expected}")
    em = step.notes.get("expected_particles")
    if em is not None and m != em:
        raise ValidationError(f"{step.name}: particle count {m} != expected {em}")


def compose_encodings(steps: Sequence[ReductionStep],
                      cap: int = DEFAULT_DIMENSION_CAP) -> Encoding:
    enc = steps[0].encoding(cap)
    for step in steps[1:]:
        enc = enc.compose(step.encoding(cap))
    return enc
