from .constants import BasisKind, Method, Mitigation, Provenance, SampleOrigin, T2Source
from .mitigators import *
from .mitigator import Mitigator
from .noise_models import *
from .noise_model import NoiseModel
from .model import (ChainSpec, DimerModel, Hamiltonian, ParameterError, SurrogateParams, extend_to_chain,
                    rotate_integrals, surrogate_dimer, surrogate_params)
from .orbitals import (DegeneracyError, MixMatrix, OrbitalBasis, T2Amplitudes, compute_t2, hfplus_basis,
                       kinetic_basis, load_t2, mixing_matrix, mp2_energy, solve_hf)
from .davidson import ConvergenceError, lowest_eigenpair
from .determinant import Determinant, DeterminantBasis, ResourceGuardError, SectorError, SectorSpace
from .topology import Topology, topology
from .circuit import Circuit, CPhase, GateCensus, Phase, X, XXPlusYY, gate_census, givens_network
from .ucj import (UcjLayer, UcjParams, cp_histogram, from_t_amplitudes, prune_to_topology, reconstruct_t2,
                  reconstruction_residuals, synthesize_circuit, t2_rank, ucj_state)
from .statevector import SectorState, simulate_full, simulate_sector
from .sample_set import SampleSet
from .sampling import electron_number_histogram, expected_missing_fraction, expected_unique, sample
from .sci import (GroundState, ProjectedHamiltonian, diagonalize, energy_error, excitation_profile,
                  fci_ground_state, missing_fraction, orbital_occupations, spin_correlations)
from .experiment import (ConvergenceCurve, ExperimentConfig, NoiseConfig, StageError, dets_at_accuracy,
                         fit_power_law, prepare_chain, run_convergence, run_scaling, shots_to_accuracy, spin_gap)


__version__ = '0.1.0'
