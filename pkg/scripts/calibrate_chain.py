#!/usr/bin/env python3
"""Measure degree-3 chain-gadget errors across (m, c) grids.

Compiles the two-qubit target -X0 - X1 + Z0 Z1 into chains of length m with
exponent c, measures (eps, eta) densely, and prints the implied safe constant
for the chain-selection rule delta^-1 >= K m J eps^-1 xi^-1 (1 + eta^-1).
The shipped CHAIN_SELECT_K is the max implied eta-side constant with margin.
"""

import argparse

import stoqtim as st
from stoqtim.chain import ChainParams, chain_splitting, chain_xi
from stoqtim.graphs import path_graph
from stoqtim.harness import verify_step
from stoqtim.reductions import ReductionParams, reduce_tim_to_degree3


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--margin", type=float, default=3.0)
    ap.add_argument("--lengths", default="2,4,6")
    args = ap.parse_args()
    target = st.TimHamiltonian(path_graph(2), {0: -1.0, 1: -1.0}, {},
                               {(0, 1): 1.0}, form="pauli")
    k_needed = 0.0
    for m in (int(x) for x in args.lengths.split(",")):
        for c in range(2, 13):
            params = ReductionParams(eps_total=1.0, eta_total=1.0,
                                     chain_length=m, chain_exponent=float(c))
            step = reduce_tim_to_degree3(target, params)
            rep = verify_step(step, verify_cap=1 << 14)
            p = ChainParams.from_exponent(m, c)
            d, xi = chain_splitting(p), chain_xi(p)
            k_eta = args.margin * 2.0 * xi * rep.eta_measured / d
            k_eps = args.margin * rep.epsilon_measured * xi / (d * m)
            k_needed = max(k_needed, k_eta, k_eps)
            print(f"m={m} c={c:2d} delta={d:.3e} eps={rep.epsilon_measured:.3e} "
                  f"eta={rep.eta_measured:.3e} K_eta={k_eta:.3e}")
    print(f"\nCHAIN_SELECT_K = {k_needed:.3f}")


if __name__ == "__main__":
    main()
