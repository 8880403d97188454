#!/usr/bin/env python3
"""Fit the gap-selection constants from measured error-scaling sweeps.

For each reduction step this sweeps the inner-gadget error on canonical small
instances, extracts the scaling prefactors C_eps, C_eta in
eps ~ C_eps * Delta^{-1/k} (and likewise for eta), and derives the smallest
threshold constant K such that the selected gap meets any requested budget
with a safety margin.  Prints a table to paste into stoqtim/calibration.py.
"""

import argparse

import numpy as np

import stoqtim as st
from stoqtim.harness import sweep_sector_error
from stoqtim.reductions import ReductionParams

MARGIN = 5.0


def instances():
    g2 = st.path_graph(2)
    g3 = st.InteractionGraph.build(3, [(0, 1), (1, 2)])
    yield ("hcb1_to_hcb2", st.reduce_hcb1_to_hcb2,
           st.HcbHamiltonian(g2, 1, 1, hopping={(0, 1): 1.0}))
    yield ("hcb1_to_hcb2", st.reduce_hcb1_to_hcb2,
           st.HcbHamiltonian(g3, 1, 1, hopping={(0, 1): 1.5, (1, 2): 0.4},
                             chemical={0: 0.3, 2: -0.2}))
    yield ("hcbstar_to_hcb1", st.reduce_hcbstar_to_hcb1,
           st.HcbHamiltonian(st.InteractionGraph.build(3, [(0, 1)]), 2, 1,
                             controlled_hopping={(2, (0, 1)): 0.7}))
    yield ("hcbstar_to_hcb1", st.reduce_hcbstar_to_hcb1,
           st.HcbHamiltonian(st.InteractionGraph.build(4, [(0, 1), (2, 3)]), 2, 1,
                             hopping={(2, 3): 0.5},
                             controlled_hopping={(2, (0, 1)): 1.2}))
    yield ("multi_to_hcb2", st.reduce_multiparticle_to_hcb2,
           st.HcbHamiltonian(g2, 1, 2, chemical={0: 0.3},
                             projector_terms=((frozenset({0}), 0.9),)))
    yield ("multi_to_hcb2", st.reduce_multiparticle_to_hcb2,
           st.HcbHamiltonian(g3, 1, 2, hopping={(0, 1): 0.6},
                             projector_terms=((frozenset({0, 2}), 1.4),)))
    yield ("hcb2_to_hcd", st.reduce_hcb2_to_hcd,
           st.HcbHamiltonian(g2, 1, 2, hopping={(0, 1): 1.0}, chemical={0: 0.2}))
    yield ("hcb2_to_hcd", st.reduce_hcb2_to_hcd,
           st.HcbHamiltonian(g3, 1, 2, hopping={(0, 1): 1.3, (1, 2): 0.5}))
    yield ("hcd_to_tim", st.reduce_hcd_to_tim,
           st.HcdHamiltonian(st.path_graph(4), 1, hopping=0.8, chemical={0: 0.1}))
    yield ("hcd_to_tim", st.reduce_hcd_to_tim,
           st.HcdHamiltonian(st.path_graph(5), 1, hopping=1.4,
                             pair_potential={(0, 4): 0.3}))
    M = np.zeros((4, 4))
    M[1, 2] = M[2, 1] = -1.0
    yield ("stoqlh_to_hcbstar", st.reduce_stoqlh_to_hcbstar,
           st.StoqLhHamiltonian(2, (((0, 1), M),)))
    M2 = np.zeros((4, 4))
    M2[0, 3] = M2[3, 0] = -0.8
    M2[0, 2] = M2[2, 0] = -0.4
    np.fill_diagonal(M2, [0.2, -0.1, 0.0, 0.3])
    yield ("stoqlh_to_hcbstar", st.reduce_stoqlh_to_hcbstar,
           st.StoqLhHamiltonian(2, (((0, 1), M2),)))


def fit_constants(step, deltas):
    sweep = sweep_sector_error(step, deltas)
    order = step.notes["order"]
    c_eps = max(e * d ** (1.0 / order) for d, e in zip(sweep.deltas, sweep.epsilons))
    c_eta = max(e * d ** (1.0 / order) for d, e in zip(sweep.deltas, sweep.etas))
    return order, c_eps, c_eta, sweep.slope


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--margin2", type=float, default=5.0,
                    help="epsilon safety margin for second-order steps")
    ap.add_argument("--margin3", type=float, default=3.0,
                    help="epsilon safety margin for third-order steps")
    args = ap.parse_args()
    table = {}
    params = ReductionParams(eps_total=1e-2, eta_total=1e-1, p_min=0.0)
    for name, fn, target in instances():
        step = fn(target, params)
        lam = max(step.notes["lambda"], 1e-9)
        deltas = np.logspace(2, 6, 9) * max(1.0, lam) ** 2
        order, c_eps, c_eta, slope = fit_constants(step, deltas)
        margin = args.margin2 if order == 2 else args.margin3
        if order == 2:
            hi, lo = lam ** 6, lam ** 2
        else:
            hi, lo = lam ** 12, lam ** 3
        k_eps = (margin * c_eps) ** order / hi
        k_eta = (margin * c_eta) ** order / lo
        prev = table.get(name, (0.0, 0.0))
        table[name] = (max(prev[0], k_eps), max(prev[1], k_eta))
        print(f"{name:22s} lam={lam:8.3f} C_eps={c_eps:9.4f} C_eta={c_eta:9.4f} "
              f"slope={slope:+.3f} K_eps={k_eps:.3e} K_eta={k_eta:.3e}")
    print("\nSTEP_K = {")
    for name, (ke, kn) in sorted(table.items()):
        print(f'    "{name}": ({ke:.3e}, {kn:.3e}),')
    print("}")


if __name__ == "__main__":
    main()
