"""Brute-force reference implementations used to validate the fast paths.

Everything here favors obviousness over speed and is deliberately independent
of the statevector simulator:

- ``pauli_to_dense`` materializes full 2^n matrices (small registers only).
- ``exact_ground_energy`` diagonalizes the particle-number-sector submatrix of
  a Pauli-mapped Hamiltonian.
- ``fci_ground_energy`` builds the same sector Hamiltonian directly from
  one- and two-electron integrals with bit-level ladder operators, bypassing
  the Pauli representation entirely; agreement between the two routes checks
  the fermion-to-qubit map end to end.
- ``dense_exponential`` and ``finite_difference_jacobian`` support circuit and
  stability cross-checks.

Basis-index convention (shared with the simulator): qubit 0 is the leftmost /
most significant position, so qubit q corresponds to array-index bit n-1-q.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .operators import COEFF_DROP_THRESHOLD, PauliSum

__all__ = [
    "pauli_to_dense",
    "pauli_sector_matrix",
    "exact_ground_energy",
    "fci_ground_energy",
    "dense_exponential",
    "finite_difference_jacobian",
]

_DENSE_QUBIT_LIMIT = 8
_SECTOR_QUBIT_LIMIT = 14


def _reverse_bits(mask: int, n_bits: int) -> int:
    """Map a qubit-space mask (bit q = qubit q) to array-index space."""
    out = 0
    for q in range(n_bits):
        if (mask >> q) & 1:
            out |= 1 << (n_bits - 1 - q)
    return out


def _term_action(
    op: PauliSum, x: int, z: int
) -> tuple[int, int, complex]:
    """Array-space masks and i^{n_Y} phase for one symplectic term."""
    n = op.n_qubits
    phase = 1j ** ((x & z).bit_count() % 4)
    return _reverse_bits(x, n), _reverse_bits(z, n), phase


def pauli_to_dense(op: PauliSum) -> np.ndarray:
    """Full 2^n x 2^n matrix of a PauliSum (n <= 8)."""
    n = op.n_qubits
    if n > _DENSE_QUBIT_LIMIT:
        raise ValueError(f"dense materialization limited to {_DENSE_QUBIT_LIMIT} qubits")
    dim = 1 << n
    cols = np.arange(dim)
    matrix = np.zeros((dim, dim), dtype=complex)
    for x, z, coeff in op.mask_items():
        x_arr, z_arr, phase = _term_action(op, x, z)
        signs = 1.0 - 2.0 * (np.bitwise_count(cols & z_arr) & 1)
        matrix[cols ^ x_arr, cols] += coeff * phase * signs
    return matrix


def pauli_sector_matrix(op: PauliSum, nelec: int) -> np.ndarray:
    """Submatrix of ``op`` restricted to basis states with ``nelec`` set bits.

    Individual Pauli terms leave the sector; their out-of-sector contributions
    belong to other blocks of a particle-conserving operator and are dropped.
    """
    n = op.n_qubits
    if n > _SECTOR_QUBIT_LIMIT:
        raise ValueError(f"sector diagonalization limited to {_SECTOR_QUBIT_LIMIT} qubits")
    if not 0 <= nelec <= n:
        raise ValueError("electron count outside register size")
    dim = 1 << n
    all_states = np.arange(dim)
    basis = all_states[np.bitwise_count(all_states) == nelec]
    size = basis.size
    matrix = np.zeros((size, size), dtype=complex)
    col_pos = np.arange(size)
    for x, z, coeff in op.mask_items():
        x_arr, z_arr, phase = _term_action(op, x, z)
        rows = basis ^ x_arr
        positions = np.searchsorted(basis, rows)
        positions = np.minimum(positions, size - 1)
        in_sector = basis[positions] == rows
        signs = 1.0 - 2.0 * (np.bitwise_count(basis & z_arr) & 1)
        np.add.at(
            matrix,
            (positions[in_sector], col_pos[in_sector]),
            coeff * phase * signs[in_sector],
        )
    return matrix


def exact_ground_energy(op: PauliSum, nelec: int) -> float:
    """Lowest eigenvalue of the ``nelec``-particle block of a Pauli operator."""
    matrix = pauli_sector_matrix(op, nelec)
    if np.abs(matrix - matrix.conj().T).max() > 1e-9:
        raise ValueError("sector matrix is not Hermitian")
    return float(scipy.linalg.eigvalsh(matrix)[0])


def _apply_ladder(det: int, ops: Sequence[tuple[int, bool]]) -> tuple[int, int] | None:
    """Apply a ladder-operator string (leftmost factor acts last) to a
    determinant bitmask (bit p = spin orbital p occupied).

    Returns (sign, new determinant) or None when the string annihilates it.
    """
    sign = 1
    for p, creation in reversed(ops):
        bit = 1 << p
        if creation == bool(det & bit):
            return None
        if (det & (bit - 1)).bit_count() & 1:
            sign = -sign
        det ^= bit
    return sign, det


def fci_ground_energy(
    h: "SpinOrbitalHamiltonian",
    nelec: int | None = None,
    two_sz: int | None = None,
) -> float:
    """Ground energy by direct determinant-basis diagonalization.

    Works from ``h.h1_so``/``h.g2_anti``/``h.core_energy`` with bit-level
    ladder operators only — no Pauli strings, no statevectors — providing an
    independent check on the fermion-to-qubit pipeline.  ``two_sz`` (number of
    alpha minus beta electrons) optionally restricts the basis along the
    conserved spin projection to keep large cases tractable.
    """
    n = h.n_so
    if nelec is None:
        nelec = len(h.occupation)
    dets = []
    for occ in combinations(range(n), nelec):
        if two_sz is not None:
            ms2 = sum(1 if p % 2 == 0 else -1 for p in occ)
            if ms2 != two_sz:
                continue
        mask = 0
        for p in occ:
            mask |= 1 << p
        dets.append(mask)
    if not dets:
        raise ValueError("empty determinant basis for the requested sector")
    position = {d: i for i, d in enumerate(dets)}
    size = len(dets)
    matrix = np.zeros((size, size))

    def scatter(ops: Sequence[tuple[int, bool]], coeff: float) -> None:
        for col, det in enumerate(dets):
            hit = _apply_ladder(det, ops)
            if hit is None:
                continue
            sign, new_det = hit
            row = position.get(new_det)
            if row is not None:
                matrix[row, col] += sign * coeff

    h1 = h.h1_so
    for p in range(n):
        for q in range(n):
            if abs(h1[p, q]) >= COEFF_DROP_THRESHOLD:
                scatter(((p, True), (q, False)), float(h1[p, q]))
    g = h.g2_anti
    for p in range(n):
        for q in range(p + 1, n):
            for r in range(n):
                for s in range(r + 1, n):
                    coeff = g[p, q, r, s]
                    if abs(coeff) >= COEFF_DROP_THRESHOLD:
                        scatter(((p, True), (q, True), (s, False), (r, False)), float(coeff))
    if np.abs(matrix - matrix.T).max() > 1e-9:
        raise ValueError("determinant Hamiltonian is not symmetric")
    return float(scipy.linalg.eigvalsh(matrix)[0] + h.core_energy)


def dense_exponential(op: PauliSum) -> np.ndarray:
    """Matrix exponential of a PauliSum via its dense form (n <= 8)."""
    return scipy.linalg.expm(pauli_to_dense(op))


def finite_difference_jacobian(
    f: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, step: float = 1e-5
) -> np.ndarray:
    """Central-difference Jacobian J[i, j] = d f_i / d x_j at ``x0``."""
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(f(x0), dtype=float)
    jac = np.zeros((f0.size, x0.size))
    for j in range(x0.size):
        shift = np.zeros_like(x0)
        shift[j] = step
        plus = np.asarray(f(x0 + shift), dtype=float)
        minus = np.asarray(f(x0 - shift), dtype=float)
        jac[:, j] = (plus - minus) / (2.0 * step)
    return jac
