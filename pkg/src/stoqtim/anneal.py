"""Adiabatic-path translation through a reduction, with gap tracking.

A path H(tau) = (1 - tau) H(0) + tau H(1) is compiled pointwise with shared
structural choices: the same decomposition term set (union over samples,
forced through the smoothing cutoff so no term appears or vanishes along the
way), the same graphs, and a single gap parameter chosen for the worst
sampled point.  The compiled family is then affine in its coefficients and
forms a genuine adiabatic path in the simulator class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .decompose import decompose_two_local_stoquastic
from .errors import ScaleInfeasibleError, ValidationError
from .harness import simulator_matrix
from .models import ModelHamiltonian, StoqLhHamiltonian, interpolate_models, model_class
from .reductions import ReductionParams, ReductionStep, compose_chain
from .spectra import lowest_eigenpairs

DEFAULT_SAMPLES = 33
GAP_FLOOR = 1e-8
OVERLAP_TARGET = 1.0 / 100.0


@dataclass(frozen=True)
class AdiabaticPath:
    """Linear interpolation between two same-class endpoint Hamiltonians."""

    start: ModelHamiltonian
    end: ModelHamiltonian
    samples: tuple[float, ...] = ()

    def __post_init__(self):
        if model_class(self.start) != model_class(self.end):
            raise ValidationError("path endpoints must share a model class")
        samples = self.samples or tuple(np.linspace(0.0, 1.0, DEFAULT_SAMPLES))
        samples = tuple(float(t) for t in samples)
        if any(b <= a for a, b in zip(samples, samples[1:])):
            raise ValidationError("tau grid must be strictly ascending")
        if samples[0] != 0.0 or samples[-1] != 1.0:
            raise ValidationError("tau grid must include 0 and 1")
        object.__setattr__(self, "samples", samples)

    def at(self, tau: float) -> ModelHamiltonian:
        return interpolate_models(self.start, self.end, tau)


@dataclass(frozen=True)
class PathReport:
    """Per-sample gaps and ground-state overlap deviations along a path."""

    taus: tuple[float, ...]
    gap_target: tuple[float, ...]
    gap_sim: tuple[float, ...]
    ground_overlap: tuple[float, ...]  # |E|g(tau)> - |g_sim(tau)>| per sample
    min_gap_target: float
    min_gap_sim: float
    time_estimate: float
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "taus": list(self.taus),
            "gap_target": list(self.gap_target),
            "gap_sim": list(self.gap_sim),
            "ground_overlap": list(self.ground_overlap),
            "min_gap_target": self.min_gap_target,
            "min_gap_sim": self.min_gap_sim,
            "time_estimate": self.time_estimate,
            "notes": {k: v for k, v in self.notes.items()
                      if isinstance(v, (int, float, str, bool, type(None)))},
        }


def _gap_and_ground(model: ModelHamiltonian, cap: int) -> tuple[float, np.ndarray]:
    op = simulator_matrix(model, cap)
    w, v = lowest_eigenpairs(op, min(2, op.dimension))
    gap = float(w[1] - w[0]) if op.dimension > 1 else math.inf
    return gap, v[:, 0]


def track_gaps(path: AdiabaticPath, cap: int = 4096,
               refine: bool = True, refine_tol: float = 1e-3) -> PathReport:
    """Gap between the two lowest levels at every sample; optional bisection
    refinement of the minimum down to refine_tol in tau."""
    taus = list(path.samples)
    gaps = [_gap_and_ground(path.at(t), cap)[0] for t in taus]
    if refine and len(taus) >= 3:
        i = int(np.argmin(gaps))
        lo = taus[max(0, i - 1)]
        hi = taus[min(len(taus) - 1, i + 1)]
        while hi - lo > refine_tol:
            mids = [lo + (hi - lo) * k / 4.0 for k in (1, 2, 3)]
            vals = [(t, _gap_and_ground(path.at(t), cap)[0]) for t in mids]
            t_best, g_best = min(vals, key=lambda kv: kv[1])
            if g_best < min(gaps):
                taus.append(t_best)
                gaps.append(g_best)
            span = (hi - lo) / 4.0
            lo, hi = t_best - span, t_best + span
    order = np.argsort(taus)
    taus_sorted = tuple(taus[i] for i in order)
    gaps_sorted = tuple(gaps[i] for i in order)
    min_gap = float(min(gaps_sorted))
    flags = {"near_degenerate": bool(min_gap < GAP_FLOOR)}
    est = estimate_traversal_time_from_gap(min_gap) if min_gap > 0 else math.inf
    return PathReport(taus_sorted, gaps_sorted, gaps_sorted,
                      tuple(0.0 for _ in taus_sorted), min_gap, min_gap, est, flags)


@dataclass(frozen=True)
class TranslatedPath:
    """Per-sample compiled steps plus the simulator-side path report."""

    source: AdiabaticPath
    steps_per_tau: tuple[tuple[ReductionStep, ...], ...]
    report: PathReport


def _forced_terms(path: AdiabaticPath) -> list[tuple[str, tuple[int, int]]]:
    keys = set()
    for tau in path.samples:
        H = path.at(tau)
        _, terms = decompose_two_local_stoquastic(H)
        keys.update((t.kind, t.qubits) for t in terms)
    return sorted(keys)


def translate_path(path: AdiabaticPath, params: ReductionParams,
                   stop_at: str = "hcbstar", cap: int = 4096,
                   gap_floor: float = GAP_FLOOR,
                   overlap_target: float = OVERLAP_TARGET,
                   max_escalations: int = 6) -> TranslatedPath:
    """Compile every sampled H(tau) with shared structure and a shared gap.

    Smoothing is always on (params.p_min = 0 is promoted to the auto default)
    so that coefficient paths stay continuous in tau; the gap parameters are
    chosen at the worst sampled point and reused everywhere, keeping the
    simulator family affine in coefficient space.  If the measured
    ground-state overlap deviation exceeds ``overlap_target`` anywhere, the
    shared gaps are escalated tenfold and the path recompiled, up to
    ``max_escalations`` times.
    """
    if not isinstance(path.start, StoqLhHamiltonian):
        raise ValidationError("path translation expects stoquastic qubit endpoints")
    if params.p_min is not None and params.p_min == 0.0:
        params = replace(params, p_min=None)  # auto default; smoothing must stay on
    # precondition: non-degenerate ground state with a positive gap everywhere
    target_gaps = []
    target_grounds = []
    for tau in path.samples:
        gap, ground = _gap_and_ground(path.at(tau), cap)
        if gap < gap_floor:
            raise ValidationError(f"target gap {gap:.3e} below floor at tau={tau}")
        target_gaps.append(gap)
        target_grounds.append(ground)
    if stop_at == "stoqlh":
        # identity reduction: the translated path is the input path
        report = PathReport(path.samples, tuple(target_gaps), tuple(target_gaps),
                            tuple(0.0 for _ in path.samples),
                            float(min(target_gaps)), float(min(target_gaps)),
                            estimate_traversal_time_from_gap(float(min(target_gaps))),
                            {"stop_at": stop_at})
        return TranslatedPath(path, tuple(() for _ in path.samples), report)
    forced = _forced_terms(path)

    # First pass: free gap selection per sample; second pass pins the maximum.
    free_steps = [compose_chain(path.at(tau), params, stop_at=stop_at,
                                forced_terms=forced)
                  for tau in path.samples]
    n_steps = len(free_steps[0])
    pinned: list[list[ReductionStep]] = [[] for _ in path.samples]
    per_position = []
    for j in range(n_steps):
        worst_delta = max(s[j].delta for s in free_steps)
        worst_tilde = max((s[j].delta_tilde or 0.0) for s in free_steps) or None
        per_position.append((worst_delta, worst_tilde))
    if any(s.notes.get("delta_saturated") or s.notes.get("coefficients_clamped")
           for steps in free_steps for s in steps):
        raise ScaleInfeasibleError(
            "gap selection saturated along the path: the translated family "
            "would carry no spectral guarantees at this depth/budget")
    escalations = 0
    while True:
        for i, tau in enumerate(path.samples):
            explicit = replace(params, delta_mode="explicit",
                               explicit_delta=per_position[0][0],
                               explicit_delta_tilde=per_position[0][1])
            steps = compose_chain(path.at(tau), explicit, stop_at=stop_at,
                                  forced_terms=forced,
                                  explicit_per_step=per_position)
            pinned[i] = steps
            names = [s.name for s in steps]
            if names != [s.name for s in free_steps[0]]:
                raise ValidationError(
                    "structural instability across tau (term set changed)")

        gaps_sim, overlaps = [], []
        for i, tau in enumerate(path.samples):
            sim = pinned[i][-1].simulator
            op = simulator_matrix(sim, cap)
            w, v = lowest_eigenpairs(op, 2)
            gaps_sim.append(float(w[1] - w[0]))
            enc = pinned[i][0].encoding(cap)
            for s in pinned[i][1:]:
                enc = enc.compose(s.encoding(cap))
            Eg = enc.to_matrix() @ target_grounds[i]
            g_sim = v[:, 0]
            if Eg @ g_sim < 0:
                g_sim = -g_sim
            overlaps.append(float(np.linalg.norm(Eg - g_sim)))
        if max(overlaps) <= overlap_target:
            break
        if escalations >= max_escalations:
            raise ValidationError(
                f"ground-state overlap {max(overlaps):.3e} still above "
                f"{overlap_target} after {escalations} gap escalations")
        escalations += 1
        per_position = [(d * 10.0, dt * 10.0 if dt is not None else None)
                        for (d, dt) in per_position]

    min_gap_t = float(min(target_gaps))
    min_gap_s = float(min(gaps_sim))
    report = PathReport(path.samples, tuple(target_gaps), tuple(gaps_sim),
                        tuple(overlaps), min_gap_t, min_gap_s,
                        estimate_traversal_time_from_gap(min_gap_s),
                        {"stop_at": stop_at, "overlap_target": overlap_target,
                         "gap_escalations": escalations})
    return TranslatedPath(path, tuple(tuple(s) for s in pinned), report)


def coefficient_derivative_norms(translated: TranslatedPath) -> tuple[float, float]:
    """Finite-difference first/second derivative norms of the compiled
    coefficients along tau (the level at which smoothness is assertable).

    Coefficient tables are aligned on the union of keys over all samples, so
    a term passing through zero at some tau still contributes."""
    taus = translated.source.samples
    tables = [_coefficient_tables(steps[-1].simulator)
              for steps in translated.steps_per_tau]
    keys = [sorted(set().union(*(t[j].keys() for t in tables)))
            for j in range(len(tables[0]))]
    vecs = [np.asarray([t[j].get(k, 0.0) for j, ks in enumerate(keys) for k in ks])
            for t in tables]
    c1 = 0.0
    c2 = 0.0
    for i in range(1, len(taus)):
        dt = taus[i] - taus[i - 1]
        c1 = max(c1, float(np.abs(vecs[i] - vecs[i - 1]).max(initial=0.0)) / dt)
    for i in range(1, len(taus) - 1):
        dt = (taus[i + 1] - taus[i - 1]) / 2.0
        second = np.abs(vecs[i + 1] - 2 * vecs[i] + vecs[i - 1]).max(initial=0.0) / dt ** 2
        c2 = max(c2, float(second))
    return c1, c2


def _coefficient_tables(model: ModelHamiltonian) -> tuple[dict, ...]:
    from .models import HcbHamiltonian, HcdHamiltonian, TimHamiltonian
    if isinstance(model, HcbHamiltonian):
        return (model.hopping, model.controlled_hopping, model.chemical,
                model.pair_potential, {"shift": model.energy_shift})
    if isinstance(model, TimHamiltonian):
        return (model.transverse, model.longitudinal, model.ising,
                {"shift": model.energy_shift})
    if isinstance(model, HcdHamiltonian):
        return ({"t": model.hopping}, model.chemical, model.pair_potential,
                {"shift": model.energy_shift})
    raise ValidationError("unsupported model for coefficient vectors")


def estimate_traversal_time_from_gap(min_gap: float, c1: float = 1.0,
                                     c2: float = 1.0) -> float:
    if min_gap <= 0:
        raise ValidationError("traversal time undefined at zero gap")
    return c1 / min_gap ** 2 + c2 / min_gap ** 2 + c1 ** 2 / min_gap ** 3


def estimate_traversal_time(report: PathReport,
                            derivative_norms: tuple[float, float]) -> float:
    """C1/d^2 + C2/d^2 + C1^2/d^3 at d = min simulator gap (unit constant)."""
    c1, c2 = derivative_norms
    return estimate_traversal_time_from_gap(report.min_gap_sim, c1, c2)
