import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from stoqtim.basis import enumerate_basis
from stoqtim.errors import ValidationError
from stoqtim.graphs import InteractionGraph, path_graph
from stoqtim.models import (HcbHamiltonian, StoqLhHamiltonian, TimHamiltonian,
                            absorb_linear_field, interpolate_models, model_class,
                            occupation_to_pauli, pauli_to_occupation)
from stoqtim.operators import build_matrix


def dense(model):
    return build_matrix(model, enumerate_basis(model)).to_dense()


def test_pauli_to_occupation_trivial():
    g = path_graph(2)
    out = pauli_to_occupation(TimHamiltonian(g, form="pauli"))
    assert out.longitudinal == {} and out.ising == {} and out.energy_shift == 0.0


def test_pauli_to_occupation_single_edge():
    g = path_graph(2)
    out = pauli_to_occupation(TimHamiltonian(g, {}, {}, {(0, 1): 1.0}, form="pauli"))
    assert out.ising == {(0, 1): 4.0}
    assert out.longitudinal == {0: -2.0, 1: -2.0}
    assert out.energy_shift == 1.0


@settings(max_examples=25, deadline=None)
@given(hst.data())
def test_pauli_occupation_spectra_agree(data):
    n = 3
    g = path_graph(n)
    coef = lambda: data.draw(hst.floats(-2, 2, allow_nan=False))
    pauli = TimHamiltonian(
        g, {u: coef() for u in range(n)}, {u: coef() for u in range(n)},
        {(u, v): coef() for u in range(n) for v in range(u + 1, n)}, form="pauli")
    occ = pauli_to_occupation(pauli)
    w1 = np.linalg.eigvalsh(dense(pauli))
    w2 = np.linalg.eigvalsh(dense(occ))
    assert np.allclose(w1, w2, atol=1e-9)
    back = occupation_to_pauli(occ)
    w3 = np.linalg.eigvalsh(dense(back))
    assert np.allclose(w1, w3, atol=1e-9)


def test_absorb_linear_field_trivial_ancilla():
    g = path_graph(2)
    H = TimHamiltonian(g, {0: -1.0}, {}, {}, form="pauli")
    out = absorb_linear_field(H)
    assert out.n == 3
    assert out.longitudinal == {}
    w_in = np.sort(np.linalg.eigvalsh(dense(H)))
    w_out = np.sort(np.linalg.eigvalsh(dense(out)))
    assert np.allclose(np.repeat(w_in, 2), w_out, atol=1e-9)


def test_absorb_doubles_multiplicities_n5():
    rng = np.random.default_rng(11)
    g = path_graph(5)
    H = TimHamiltonian(g, {u: rng.uniform(-1, 1) for u in range(5)},
                       {u: rng.uniform(-1, 1) for u in range(5)},
                       {e: rng.uniform(-1, 1) for e in g.edge_list}, form="pauli")
    out = absorb_linear_field(H)
    w_in = np.sort(np.linalg.eigvalsh(dense(H)))
    w_out = np.sort(np.linalg.eigvalsh(dense(out)))
    assert np.allclose(np.repeat(w_in, 2), w_out, atol=1e-8)


def test_absorb_linear_field_single_z():
    H = TimHamiltonian(path_graph(1), {}, {0: 1.0}, {}, form="pauli")
    out = absorb_linear_field(H)
    assert out.ising == {(0, 1): 1.0}
    w = np.sort(np.linalg.eigvalsh(dense(out)))
    assert np.allclose(w, [-1, -1, 1, 1], atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(hst.data())
def test_absorb_doubles_multiplicities(data):
    n = 2
    g = path_graph(n)
    coef = lambda: data.draw(hst.floats(-2, 2, allow_nan=False))
    H = TimHamiltonian(g, {u: coef() for u in range(n)},
                       {u: coef() for u in range(n)}, {(0, 1): coef()}, form="pauli")
    out = absorb_linear_field(H)
    w_in = np.sort(np.linalg.eigvalsh(dense(H)))
    w_out = np.sort(np.linalg.eigvalsh(dense(out)))
    assert np.allclose(np.repeat(w_in, 2), w_out, atol=1e-8)


def test_zz_degree_and_flag():
    g = path_graph(4)
    H = TimHamiltonian(g, {}, {}, {(0, 1): 1.0, (1, 2): 1.0, (2, 3): 1.0})
    assert H.zz_degree(1) == 2
    assert H.max_zz_degree() == 2
    assert H.is_degree3()
    assert H.interaction_strength() == 1.0


def test_stoquastic_frame_flips_positive_transverse():
    g = path_graph(2)
    H = TimHamiltonian(g, {0: 2.0, 1: -1.0}, {}, {})
    framed, flipped = H.stoquastic_frame()
    assert flipped == (0,)
    assert framed.transverse == {0: -2.0, 1: -1.0}
    assert np.allclose(np.linalg.eigvalsh(dense(H)), np.linalg.eigvalsh(dense(framed)))


def test_hopping_sign_validation():
    g = path_graph(2)
    with pytest.raises(ValidationError):
        HcbHamiltonian(g, 1, 1, hopping={(0, 1): -0.5})
    # tiny negatives are clamped to zero
    H = HcbHamiltonian(g, 1, 1, hopping={(0, 1): -1e-13})
    assert H.hopping == {}


def test_control_node_disjoint_from_edge():
    g = InteractionGraph.build(3, [(0, 1)])
    with pytest.raises(ValidationError):
        HcbHamiltonian(g, 1, 1, controlled_hopping={(0, (0, 1)): 0.5})


def test_stoqlh_rejects_positive_offdiagonal():
    M = np.zeros((4, 4))
    M[1, 2] = M[2, 1] = +0.3
    with pytest.raises(ValidationError):
        StoqLhHamiltonian(2, (((0, 1), M),))


def test_model_class_tags():
    g = path_graph(2)
    assert model_class(TimHamiltonian(g)) == "tim"
    assert model_class(HcbHamiltonian(g, 1, 1)) == "hcb"
    g3 = InteractionGraph.build(3, [(0, 1)])
    assert model_class(HcbHamiltonian(g3, 1, 1,
                                      controlled_hopping={(2, (0, 1)): 1.0})) == "hcbstar"


def test_interpolation_is_affine():
    g = path_graph(2)
    A = HcbHamiltonian(g, 1, 1, hopping={(0, 1): 1.0}, chemical={0: 1.0})
    B = HcbHamiltonian(g, 1, 1, hopping={(0, 1): 3.0}, chemical={1: 2.0})
    mid = interpolate_models(A, B, 0.25)
    assert mid.hopping[(0, 1)] == pytest.approx(1.5)
    assert mid.chemical == {0: 0.75, 1: 0.5}
