"""stoqtim: compile stoquastic local Hamiltonians down to transverse-field
Ising models on degree-3 graphs, and verify each step spectrally."""

from .basis import BasisSpace, enumerate_basis, is_m_dimer
from .chain import (ChainParams, ChainSpectrum, chain_energies, chain_eta,
                    chain_eta_monotonicity, chain_gap, chain_spectrum,
                    chain_splitting, chain_splitting_integral, chain_xi,
                    select_chain_parameters)
from .decompose import decompose_two_local_stoquastic
from .encodings import Encoding
from .errors import (EmptySectorError, GapClosureError,
                     IllConditionedRotationError, ScaleInfeasibleError,
                     SolverError, StoqtimError, UnreachableTargetError,
                     ValidationError)
from .graphs import (InteractionGraph, complete_graph, cycle_graph,
                     grid_graph, path_graph)
from .harness import (ReductionReport, check_gadget_identities, step_gadget_check,
                      sweep_sector_error, verify_chain, verify_step)
from .models import (HcbHamiltonian, HcdHamiltonian, StoqLhHamiltonian,
                     TimHamiltonian, absorb_linear_field, interpolate_models,
                     model_class, occupation_to_pauli, pauli_to_occupation)
from .operators import SparseOperator, build_matrix, check_stoquastic
from .reductions import (ReductionParams, ReductionStep, compose_chain,
                         compose_encodings, reduce_hcb1_to_hcb2,
                         reduce_hcb2_to_hcd, reduce_hcbstar_to_hcb1,
                         reduce_hcd_to_tim, reduce_multiparticle_to_hcb2,
                         reduce_stoqlh_to_hcbstar, reduce_tim_to_degree3)
from .spectra import (BlockSplit, EffectiveHamiltonian, SimulationError,
                      effective_hamiltonian_exact, effective_hamiltonian_order_k,
                      lowest_eigenpairs, measure_simulation_error, spectral_gap)

__version__ = "0.1.0"
