#!/usr/bin/env python3
"""Gap sweeps for every gadget: print measured (eps, eta) scaling tables.

For each reduction the inner gadget is swept across gap values and the
log-log slopes of the measured operator-norm error (eps) and eigenvector
error (eta) are reported.  Second-order gadgets show eps ~ 1/Delta (the
odd-order main-perturbation sandwich cancels by ancilla-occupation parity)
while eta ~ Delta^(-1/2); third-order gadgets show eps ~ Delta^(-1/3).
"""

import argparse

import numpy as np

import stoqtim as st
from stoqtim.harness import sweep_sector_error
from stoqtim.reductions import ReductionParams


def instances():
    yield ("dimers->TIM      (order 2)", st.reduce_hcd_to_tim,
           st.HcdHamiltonian(st.path_graph(4), 1, hopping=0.8, chemical={0: 0.1}))
    yield ("bosons->dimers   (order 3)", st.reduce_hcb2_to_hcd,
           st.HcbHamiltonian(st.path_graph(3), 1, 2,
                             hopping={(0, 1): 1.3, (1, 2): 0.4}, chemical={1: 0.2}))
    yield ("projector gadget (order 2)", st.reduce_multiparticle_to_hcb2,
           st.HcbHamiltonian(st.path_graph(2), 1, 2, chemical={0: 0.3},
                             projector_terms=((frozenset({0}), 0.9),)))
    yield ("edge subdivision (order 2)", st.reduce_hcb1_to_hcb2,
           st.HcbHamiltonian(st.path_graph(2), 1, 1, hopping={(0, 1): 1.0}))
    yield ("controlled hops  (order 2)", st.reduce_hcbstar_to_hcb1,
           st.HcbHamiltonian(st.InteractionGraph.build(3, [(0, 1)]), 2, 1,
                             controlled_hopping={(2, (0, 1)): 0.7}))
    M = np.zeros((4, 4))
    M[1, 2] = M[2, 1] = -1.0
    yield ("dual rail        (order 3)", st.reduce_stoqlh_to_hcbstar,
           st.StoqLhHamiltonian(2, (((0, 1), M),)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=7)
    ap.add_argument("--decades", default="2,5")
    args = ap.parse_args()
    lo, hi = (float(x) for x in args.decades.split(","))
    params = ReductionParams(eps_total=1e-2, eta_total=1e-1, p_min=0.0)
    for label, fn, target in instances():
        step = fn(target, params)
        lam = max(step.notes["lambda"], 1.0)
        deltas = np.logspace(lo, hi, args.points) * lam
        sweep = sweep_sector_error(step, deltas)
        eta_slope = np.polyfit(np.log(sweep.deltas), np.log(sweep.etas), 1)[0]
        print(f"{label}: eps-slope {sweep.slope:+.3f}, eta-slope {eta_slope:+.3f}, "
              f"per-level ok {sweep.per_level_ok}")
        for d, e, h in zip(sweep.deltas, sweep.epsilons, sweep.etas):
            print(f"    Delta {d:10.3e}  eps {e:10.3e}  eta {h:10.3e}")


if __name__ == "__main__":
    main()
