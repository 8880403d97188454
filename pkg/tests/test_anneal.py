import numpy as np
import pytest

import stoqtim as st
from stoqtim.anneal import (AdiabaticPath, coefficient_derivative_norms,
                            estimate_traversal_time, track_gaps, translate_path)
from stoqtim.errors import ValidationError
from stoqtim.reductions import ReductionParams


def zdiag(c0, c1, zz=0.0):
    M = np.zeros((4, 4))
    for a in range(4):
        z0 = 1 - 2 * ((a >> 1) & 1)
        z1 = 1 - 2 * (a & 1)
        M[a, a] = c0 * z0 + c1 * z1 + zz * z0 * z1
    return st.StoqLhHamiltonian(2, (((0, 1), M),))


def test_single_qubit_x_to_z_gap_closed_form():
    # H(tau) = -(1-tau) X - tau Z: gap 2 sqrt((1-tau)^2 + tau^2), min sqrt(2)
    g = st.path_graph(1)
    start = st.TimHamiltonian(g, {0: -1.0}, {}, {}, form="pauli")
    end = st.TimHamiltonian(g, {}, {0: -1.0}, {}, form="pauli")
    taus = tuple(np.linspace(0, 1, 9))
    rep = track_gaps(AdiabaticPath(start, end, taus), refine=True)
    for t, gap in zip(rep.taus, rep.gap_target):
        assert gap == pytest.approx(2 * np.hypot(1 - t, t), abs=1e-9)
    assert rep.min_gap_target == pytest.approx(np.sqrt(2), abs=1e-3)


def test_constant_path_gap_constant():
    path = AdiabaticPath(zdiag(-1, -1), zdiag(-1, -1), (0.0, 0.5, 1.0))
    rep = track_gaps(path, refine=False)
    assert len(set(round(g, 12) for g in rep.gap_target)) == 1


def test_endpoints_must_share_class():
    g = st.path_graph(2)
    with pytest.raises(ValidationError):
        AdiabaticPath(st.TimHamiltonian(g), st.HcbHamiltonian(g, 1, 1))


def test_grid_must_cover_unit_interval():
    with pytest.raises(ValidationError):
        AdiabaticPath(zdiag(-1, -1), zdiag(-1, -1), (0.0, 0.5))


def test_translate_constant_path_steps_identical():
    path = AdiabaticPath(zdiag(-1, -1, 0.3), zdiag(-1, -1, 0.3), (0.0, 0.5, 1.0))
    out = translate_path(path, ReductionParams(eps_total=0.05, eta_total=0.05))
    sims = [steps[-1].simulator for steps in out.steps_per_tau]
    assert sims[0] == sims[1] == sims[2]


def test_translate_two_qubit_path_gap_and_overlap():
    path = AdiabaticPath(zdiag(-1, -1), zdiag(-1, -1, 0.8),
                         tuple(np.linspace(0, 1, 9)))
    out = translate_path(path, ReductionParams(eps_total=0.05, eta_total=0.05),
                         stop_at="hcbstar")
    rep = out.report
    assert rep.min_gap_sim >= rep.min_gap_target / 3.0
    assert max(rep.ground_overlap) <= 1.0 / 100.0
    # shared structure: same graphs and same gap parameters across tau
    deltas = {steps[-1].delta for steps in out.steps_per_tau}
    assert len(deltas) == 1
    graphs = {steps[-1].simulator.graph for steps in out.steps_per_tau}
    assert len(graphs) == 1


def test_translate_detects_gap_floor_violation():
    # crossing diagonal levels closes the gap at tau = 1/2
    path = AdiabaticPath(zdiag(-1, 0.0), zdiag(+1, 0.0), (0.0, 0.5, 1.0))
    with pytest.raises(ValidationError, match="gap"):
        translate_path(path, ReductionParams(eps_total=0.05, eta_total=0.05))


def test_derivative_norms_bounded_with_smoothing():
    path = AdiabaticPath(zdiag(-1, -1), zdiag(-1, -1, 0.8),
                         tuple(np.linspace(0, 1, 9)))
    out = translate_path(path, ReductionParams(eps_total=0.05, eta_total=0.05))
    c1, c2 = coefficient_derivative_norms(out)
    assert np.isfinite(c1) and np.isfinite(c2)
    assert c1 < 1e3 and c2 < 1e3


def test_traversal_time_formula():
    from stoqtim.anneal import PathReport
    rep = PathReport((0.0, 1.0), (1.0, 1.0), (1.0, 1.0), (0.0, 0.0), 1.0, 1.0, 0.0)
    assert estimate_traversal_time(rep, (1.0, 1.0)) == pytest.approx(3.0)
    rep_half = PathReport((0.0, 1.0), (0.5, 0.5), (0.5, 0.5), (0.0, 0.0), 0.5, 0.5, 0.0)
    ratio = estimate_traversal_time(rep_half, (1.0, 1.0)) / 3.0
    assert 4.0 <= ratio <= 8.0


def test_translate_identity_reduction_returns_input_path():
    path = AdiabaticPath(zdiag(-1, -1), zdiag(-1, -1, 0.8), (0.0, 0.5, 1.0))
    out = translate_path(path, ReductionParams(eps_total=0.05, eta_total=0.05),
                         stop_at="stoqlh")
    assert out.steps_per_tau == ((), (), ())
    assert out.report.gap_sim == out.report.gap_target
    assert all(o == 0.0 for o in out.report.ground_overlap)


def test_translated_traversal_overhead_is_polynomial():
    # overhead of the translated path over the target path, in the time formula
    from stoqtim.anneal import estimate_traversal_time_from_gap
    path = AdiabaticPath(zdiag(-1, -1), zdiag(-1, -1, 0.8),
                         tuple(np.linspace(0, 1, 9)))
    out = translate_path(path, ReductionParams(eps_total=0.05, eta_total=0.05),
                         stop_at="hcbstar")
    c1, c2 = coefficient_derivative_norms(out)
    t_sim = estimate_traversal_time(out.report, (c1, c2))
    # target-side derivative norms: endpoint coefficient differences
    c1_t = 0.8  # the single ZZ coefficient ramps from 0 to 0.8
    t_target = estimate_traversal_time_from_gap(out.report.min_gap_target, c1_t, 0.0)
    n = 2
    delta = out.report.min_gap_target
    assert t_sim / t_target <= 100.0 * n * (1.0 + 1.0 / delta) ** 3


def test_translate_path_with_ramping_hop_term():
    # an off-diagonal term ramps from 0: smoothing must keep the gadget
    # structure (ancilla set, graphs) identical along the whole path
    def endpoint(w):
        M = np.diag([-2.0, 0.0, 0.0, 2.0])  # -Z0 - Z1
        M[1, 2] = M[2, 1] = -w
        return st.StoqLhHamiltonian(2, (((0, 1), M),))

    path = AdiabaticPath(endpoint(0.0), endpoint(0.5), tuple(np.linspace(0, 1, 9)))
    out = translate_path(path, ReductionParams(eps_total=0.05, eta_total=0.05),
                         stop_at="hcbstar")
    graphs = {steps[-1].simulator.graph for steps in out.steps_per_tau}
    assert len(graphs) == 1
    ns = {steps[-1].simulator.n for steps in out.steps_per_tau}
    assert ns == {5}  # the hop ancilla exists at every tau, including tau = 0
    rep = out.report
    assert all(gs >= gt / 3 for gs, gt in zip(rep.gap_sim, rep.gap_target))
    assert max(rep.ground_overlap) <= 1 / 100
    c1, c2 = coefficient_derivative_norms(out)
    assert np.isfinite(c1) and np.isfinite(c2)


def test_translate_refuses_saturated_depths():
    # deeper stops saturate the gap selection; the translated family would
    # carry no guarantees, so translation refuses instead of reporting noise
    from stoqtim.errors import ScaleInfeasibleError

    def endpoint(w):
        M = np.diag([-2.0, 0.0, 0.0, 2.0])
        M[1, 2] = M[2, 1] = -w
        return st.StoqLhHamiltonian(2, (((0, 1), M),))

    path = AdiabaticPath(endpoint(0.0), endpoint(0.5), (0.0, 0.5, 1.0))
    with pytest.raises(ScaleInfeasibleError):
        translate_path(path, ReductionParams(eps_total=0.05, eta_total=0.05),
                       stop_at="hcd")


def test_overlap_target_escalates_underpowered_gaps():
    # force tiny initial gaps; escalation must raise them until the measured
    # overlap deviation meets the requested target
    def endpoint(w):
        M = np.diag([-2.0, 0.0, 0.0, 2.0])
        M[1, 2] = M[2, 1] = -w
        return st.StoqLhHamiltonian(2, (((0, 1), M),))

    path = AdiabaticPath(endpoint(0.0), endpoint(0.5), (0.0, 0.5, 1.0))
    weak = ReductionParams(eps_total=0.05, eta_total=0.05,
                           delta_mode="explicit", explicit_delta=20.0,
                           explicit_delta_tilde=400.0)
    out = translate_path(path, weak, stop_at="hcbstar", overlap_target=5e-3)
    assert out.report.notes["gap_escalations"] >= 1
    assert max(out.report.ground_overlap) <= 5e-3
