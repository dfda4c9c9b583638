"""Projective quantum eigensolver laboratory.

Statevector implementations of residue-driven coupled-cluster solvers, their
principal/auxiliary decoupled variants, a depolarizing noise model with
zero-noise extrapolation, and brute-force oracles that cross-check every fast
path at small system sizes.
"""

from .operators import (
    Excitation,
    PauliString,
    PauliSum,
    excitation_pool,
    hamiltonian_to_pauli,
)
from .hamiltonian import (
    DegenerateDenominatorError,
    MolecularIntegrals,
    NonCanonicalOrbitalsWarning,
    OrbitalEnergies,
    SpinOrbitalHamiltonian,
    build_hubbard_chain,
    compute_fock,
    fock_matrix,
    hartree_fock_energy,
    mp2_denominator,
    spatial_to_spin_orbital,
)
from .fcidump import FcidumpFormatError, parse_fcidump, read_fcidump_file, write_fcidump
from .statevector import (
    OrderedAnsatz,
    apply_excitation_rotation,
    excited_state,
    expectation,
    omega_state,
    reference_state,
)
from .pqe import (
    ConvergenceTrace,
    IterationRecord,
    PqeConfig,
    PqeResult,
    initialize_parameters,
    pqe_energy,
    pqe_solve,
    residue_measurement_mode,
    residue_projection,
)
from .adpqe import (
    ADResult,
    PartitionPlan,
    StabilitySpectrum,
    corrected_energy,
    feedback_adpqe_solve,
    map_auxiliary,
    nfc_residue,
    nfc_solve,
    partition_and_order,
    stability_spectrum,
)
from .noise import (
    FaultReport,
    GateCounts,
    MeasurementBudget,
    NoiseModel,
    NoisyAggregate,
    NoisyRunResult,
    Preparation,
    ProtocolConfig,
    QebConstants,
    ZneConfig,
    count_gates,
    depolarize_batch,
    fault_report,
    fold_and_measure,
    measurement_budget,
    mitigated_expectation,
    noisy_expectation,
    noisy_protocol_run,
    richardson_extrapolate,
)

__version__ = "0.1.0"
