"""Residue-driven coupled-cluster solver (projective quantum eigensolver).

Parameters are optimized by driving the projections of the dressed
Schrodinger equation onto excited determinants to zero with the quasi-Newton
map theta <- theta + r/D, where D are orbital-energy denominators.  Residues
come in two mathematically equivalent forms: direct projection, and a
three-expectation interference form that corresponds to what a hardware
experiment would measure.  The dressed operator U^dag H U is never
materialized; every bracket is evaluated by rotating states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import OrbitalEnergies, SpinOrbitalHamiltonian, mp2_denominator
from .operators import Excitation, PauliSum, excitation_pool, hamiltonian_to_pauli
from .statevector import (
    OrderedAnsatz,
    compiled,
    determinant_index,
    excited_determinant,
    excited_state,
    omega_state,
    reference_state,
)

__all__ = [
    "PqeConfig",
    "IterationRecord",
    "ConvergenceTrace",
    "PqeResult",
    "initialize_parameters",
    "residue_projection",
    "residue_measurement_mode",
    "residue_measurement_vector",
    "pqe_energy",
    "pqe_solve",
]

# Residue components are analytically real; larger imaginary parts indicate a
# broken convention somewhere upstream.
RESIDUE_REALITY_TOLERANCE = 1e-10

MEASUREMENT_ANGLE = np.pi / 4.0


@dataclass(frozen=True)
class PqeConfig:
    """Iteration limits for the quasi-Newton solve."""

    max_iterations: int = 200
    residue_tolerance: float = 1e-5

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("need at least one iteration")
        if self.residue_tolerance <= 0:
            raise ValueError("residue tolerance must be positive")


@dataclass(frozen=True)
class IterationRecord:
    """One solver iteration: energy and residue norm at the pre-update
    parameters, plus the running count of residue-component evaluations.

    ``kind`` distinguishes ordinary iterations from bookkeeping records a
    variant may append (e.g. a terminal post-optimization mapping entry).
    """

    iteration: int
    energy: float
    residue_inf_norm: float
    cumulative_residue_evals: int
    kind: str = "iteration"


@dataclass(frozen=True)
class ConvergenceTrace:
    """Per-iteration records and the final status."""

    records: tuple[IterationRecord, ...]
    status: str  # "converged" | "max_iterations"

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]


@dataclass(frozen=True)
class PqeResult:
    """Solution parameters with their convergence trace."""

    params: np.ndarray
    energy: float
    trace: ConvergenceTrace

    @property
    def converged(self) -> bool:
        return self.trace.converged

    @property
    def n_iterations(self) -> int:
        return len(self.trace.records)


def _check_real(values: np.ndarray, context: str) -> np.ndarray:
    worst = float(np.abs(values.imag).max()) if values.size else 0.0
    if worst > RESIDUE_REALITY_TOLERANCE:
        raise ArithmeticError(
            f"{context} has imaginary magnitude {worst:.3e}; "
            "real-arithmetic invariant violated"
        )
    return values.real


def _dressed_image(
    h_pauli: PauliSum,
    ansatz: OrderedAnsatz,
    params: np.ndarray,
    occupation: tuple[int, ...],
) -> tuple[np.ndarray, float]:
    """chi = U^dag H U |ref> and the reference energy, from one sweep.

    Every projection of the dressed Hamiltonian onto a determinant is an
    amplitude of chi, so a single pipeline serves an arbitrary number of
    residue components.
    """
    ref = reference_state(occupation, ansatz.n_qubits)
    psi = ansatz.apply(ref, params)
    phi = compiled(h_pauli).apply(psi)
    energy = float(np.real(np.vdot(psi, phi)))
    return ansatz.apply_adjoint(phi, params), energy


def _project_components(
    chi: np.ndarray,
    excitations: tuple[Excitation, ...],
    occupation: tuple[int, ...],
    n_qubits: int,
) -> np.ndarray:
    """Signed determinant amplitudes <Phi_mu|chi> for each excitation."""
    raw = []
    for exc in excitations:
        sign, new_occ = excited_determinant(occupation, exc)
        raw.append(sign * chi[determinant_index(new_occ, n_qubits)])
    return _check_real(np.array(raw), "residue vector")


def _residues_and_energy(
    h_pauli: PauliSum,
    ansatz: OrderedAnsatz,
    params: np.ndarray,
    occupation: tuple[int, ...],
) -> tuple[np.ndarray, float]:
    """Projection residues (one per ansatz excitation) and reference energy."""
    chi, energy = _dressed_image(h_pauli, ansatz, params, occupation)
    residues = _project_components(
        chi, ansatz.excitations, occupation, ansatz.n_qubits
    )
    return residues, energy


def residue_projection(
    h_pauli: PauliSum,
    ansatz: OrderedAnsatz,
    params: np.ndarray,
    occupation: tuple[int, ...],
) -> np.ndarray:
    """Residues <Phi_mu| U^dag H U |Phi_0>, one per ansatz excitation."""
    residues, _ = _residues_and_energy(h_pauli, ansatz, np.asarray(params, float), occupation)
    return residues


def pqe_energy(
    h_pauli: PauliSum,
    ansatz: OrderedAnsatz,
    params: np.ndarray,
    occupation: tuple[int, ...],
) -> float:
    """Reference energy <Phi_0| U^dag H U |Phi_0>."""
    ref = reference_state(occupation, ansatz.n_qubits)
    psi = ansatz.apply(ref, np.asarray(params, float))
    return compiled(h_pauli).expectation(psi)


def residue_measurement_mode(
    h_pauli: PauliSum,
    ansatz: OrderedAnsatz,
    params: np.ndarray,
    exc: Excitation,
    occupation: tuple[int, ...],
) -> float:
    """One residue from three dressed expectation values.

    r_mu = <Omega|Hbar|Omega> - (<Phi_mu|Hbar|Phi_mu> + <Phi_0|Hbar|Phi_0>)/2
    with |Omega> = exp(kappa_mu * pi/4)|Phi_0>; the interference term isolates
    the real part of the off-diagonal element, which equals the projection
    residue for the real-arithmetic ansatz used here.
    """
    params = np.asarray(params, float)
    n = ansatz.n_qubits
    h = compiled(h_pauli)
    omega = omega_state(occupation, exc, MEASUREMENT_ANGLE, n)
    interference = h.expectation(ansatz.apply(omega, params))
    excited_energy = h.expectation(ansatz.apply(excited_state(occupation, exc, n), params))
    reference_energy = h.expectation(ansatz.apply(reference_state(occupation, n), params))
    return interference - 0.5 * excited_energy - 0.5 * reference_energy


def residue_measurement_vector(
    h_pauli: PauliSum,
    ansatz: OrderedAnsatz,
    params: np.ndarray,
    occupation: tuple[int, ...],
) -> np.ndarray:
    """All ansatz residues via the three-expectation form (test utility)."""
    return np.array(
        [
            residue_measurement_mode(h_pauli, ansatz, params, exc, occupation)
            for exc in ansatz.excitations
        ]
    )


def initialize_parameters(
    h: SpinOrbitalHamiltonian,
    eps: OrbitalEnergies,
    pool: list[Excitation] | None = None,
    h_pauli: PauliSum | None = None,
) -> np.ndarray:
    """First-order start: perturbative doubles, then singles from one residue
    evaluation at that doubles point.

    Doubles get theta = <ij||ab>/D.  Singles vanish at theta = 0 for a
    canonical reference (Brillouin), so they are seeded by a single
    quasi-Newton step r/D evaluated with the doubles in place.
    """
    if pool is None:
        pool = excitation_pool(h)
    if h_pauli is None:
        h_pauli = hamiltonian_to_pauli(h)
    params = np.zeros(len(pool))
    for slot, exc in enumerate(pool):
        if exc.rank == 2:
            (i, j), (a, b) = exc.occ, exc.virt
            params[slot] = h.g2_anti[i, j, a, b] / mp2_denominator(exc, eps)
    single_slots = [slot for slot, exc in enumerate(pool) if exc.rank == 1]
    if single_slots:
        ansatz = OrderedAnsatz(h.n_so, tuple(pool))
        residues = residue_projection(h_pauli, ansatz, params, h.occupation)
        for slot in single_slots:
            params[slot] = residues[slot] / mp2_denominator(pool[slot], eps)
    return params


def pqe_solve(
    h_pauli: PauliSum,
    ansatz: OrderedAnsatz,
    init: np.ndarray,
    eps: OrbitalEnergies,
    occupation: tuple[int, ...],
    config: PqeConfig = PqeConfig(),
) -> PqeResult:
    """Iterate theta <- theta + r/D until max|r| drops below tolerance.

    No acceleration of any kind is applied on top of the quasi-Newton map.
    Each iteration contributes one record (pre-update energy, residue
    infinity-norm, cumulative residue-component evaluations) to the trace;
    hitting the iteration cap is reported in the status, never raised.
    """
    params = np.array(init, dtype=float)
    if params.shape != (ansatz.n_parameters,):
        raise ValueError("initial parameters do not match the ansatz")
    denominators = np.array(
        [mp2_denominator(exc, eps) for exc in ansatz.excitations]
    )
    records: list[IterationRecord] = []
    evaluations = 0
    status = "max_iterations"
    for iteration in range(config.max_iterations):
        residues, energy = _residues_and_energy(h_pauli, ansatz, params, occupation)
        evaluations += ansatz.n_parameters
        norm = float(np.abs(residues).max()) if residues.size else 0.0
        records.append(IterationRecord(iteration, energy, norm, evaluations))
        if norm < config.residue_tolerance:
            status = "converged"
            break
        if iteration == config.max_iterations - 1:
            # Keep the returned parameters at the recorded point.
            break
        params = params + residues / denominators
    trace = ConvergenceTrace(records=tuple(records), status=status)
    return PqeResult(params=params, energy=trace.final.energy, trace=trace)
