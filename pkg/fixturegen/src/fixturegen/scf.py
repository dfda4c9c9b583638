"""Closed-shell restricted Hartree-Fock with DIIS convergence acceleration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["ScfResult", "ScfConvergenceError", "run_rhf"]


class ScfConvergenceError(RuntimeError):
    """Raised when the SCF loop fails to reach the requested thresholds."""


@dataclass(frozen=True)
class ScfResult:
    """Converged RHF solution in the atomic-orbital basis."""

    energy: float  # total energy including nuclear repulsion
    mo_coefficients: np.ndarray  # AO x MO, canonical orbitals
    mo_energies: np.ndarray
    density: np.ndarray  # AO density, trace = nelec
    n_iterations: int


def _build_fock(hcore: np.ndarray, eri: np.ndarray, density: np.ndarray) -> np.ndarray:
    coulomb = np.einsum("pqrs,rs->pq", eri, density, optimize=True)
    exchange = np.einsum("prqs,rs->pq", eri, density, optimize=True)
    return hcore + coulomb - 0.5 * exchange


def run_rhf(
    overlap: np.ndarray,
    hcore: np.ndarray,
    eri: np.ndarray,
    nelec: int,
    nuclear_energy: float,
    max_iterations: int = 200,
    energy_tolerance: float = 1e-12,
    gradient_tolerance: float = 1e-9,
    diis_depth: int = 8,
) -> ScfResult:
    """Iterate Fock diagonalization to self-consistency.

    The orbital gradient is the commutator F·D·S − S·D·F, which doubles as the
    DIIS error vector.  The returned orbitals diagonalize the unextrapolated
    Fock matrix of the converged density, so the MO-basis Fock is diagonal to
    the gradient tolerance.
    """
    if nelec % 2 != 0:
        raise ValueError("restricted Hartree-Fock needs an even electron count")
    nocc = nelec // 2
    if nocc > overlap.shape[0]:
        raise ValueError("more electron pairs than basis functions")

    def diagonalize(fock: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        mo_energies, coeff = scipy.linalg.eigh(fock, overlap)
        occupied = coeff[:, :nocc]
        return 2.0 * occupied @ occupied.T, coeff, mo_energies

    def electronic_energy(density: np.ndarray, fock: np.ndarray) -> float:
        return 0.5 * float(np.einsum("pq,pq->", density, hcore + fock))

    density, _, _ = diagonalize(hcore)
    previous_energy = np.inf
    fock_history: list[np.ndarray] = []
    error_history: list[np.ndarray] = []
    gradient_norm = np.inf

    for iteration in range(1, max_iterations + 1):
        fock = _build_fock(hcore, eri, density)
        gradient = fock @ density @ overlap - overlap @ density @ fock
        gradient_norm = float(np.abs(gradient).max())
        energy = electronic_energy(density, fock) + nuclear_energy

        if abs(energy - previous_energy) < energy_tolerance and gradient_norm < gradient_tolerance:
            final_density, coeff, mo_energies = diagonalize(fock)
            final_fock = _build_fock(hcore, eri, final_density)
            return ScfResult(
                energy=electronic_energy(final_density, final_fock) + nuclear_energy,
                mo_coefficients=coeff,
                mo_energies=mo_energies,
                density=final_density,
                n_iterations=iteration,
            )
        previous_energy = energy

        fock_history.append(fock)
        error_history.append(gradient.ravel())
        if len(fock_history) > diis_depth:
            fock_history.pop(0)
            error_history.pop(0)
        if len(fock_history) > 1:
            m = len(fock_history)
            system = -np.ones((m + 1, m + 1))
            system[m, m] = 0.0
            for i in range(m):
                for j in range(m):
                    system[i, j] = float(error_history[i] @ error_history[j])
            rhs = np.zeros(m + 1)
            rhs[m] = -1.0
            try:
                weights = np.linalg.solve(system, rhs)[:m]
                fock = sum(w * f for w, f in zip(weights, fock_history))
            except np.linalg.LinAlgError:
                pass  # singular DIIS system: keep the bare Fock matrix

        density, _, _ = diagonalize(fock)

    raise ScfConvergenceError(
        f"no convergence in {max_iterations} iterations "
        f"(last gradient {gradient_norm:.3e})"
    )
