"""Dense statevector simulation of Pauli operators and excitation rotations.

Amplitude indexing: qubit 0 is the leftmost / most significant position, so
qubit q owns array-index bit n-1-q.  Occupied spin orbitals are |1>.  All
expectation values of the transformed Hamiltonian are evaluated by rotating
states, never by materializing transformed operators.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .operators import Excitation, PauliSum, kappa_to_pauli

__all__ = [
    "CompiledPauliSum",
    "compiled",
    "reference_state",
    "determinant_index",
    "excited_determinant",
    "excited_state",
    "apply_excitation_rotation",
    "OrderedAnsatz",
    "omega_state",
    "expectation",
]

# Element budget per vectorized chunk when sweeping Pauli terms x amplitudes.
_CHUNK_ELEMENTS = 1 << 20


def _to_array_mask(mask: int, n_qubits: int) -> int:
    """Qubit-space mask (bit q = qubit q) to array-index space."""
    out = 0
    for q in range(n_qubits):
        if (mask >> q) & 1:
            out |= 1 << (n_qubits - 1 - q)
    return out


class CompiledPauliSum:
    """Array form of a PauliSum for fast repeated statevector sweeps.

    Terms are split into coefficient, letter phase i^{n_Y}, and array-space
    bit masks, so that each term acts as
    (P psi)[i] = phase * (-1)^{parity(z & (i XOR x))} * psi[i XOR x].
    """

    __slots__ = ("n_qubits", "dim", "coeffs", "phases", "x_masks", "z_masks")

    def __init__(self, op: PauliSum):
        self.n_qubits = op.n_qubits
        self.dim = 1 << op.n_qubits
        triples = op.mask_items()
        self.coeffs = np.array([c for _, _, c in triples], dtype=complex)
        self.phases = np.array(
            [1j ** ((x & z).bit_count() % 4) for x, z, _ in triples], dtype=complex
        )
        self.x_masks = np.array(
            [_to_array_mask(x, op.n_qubits) for x, _, _ in triples], dtype=np.int64
        )
        self.z_masks = np.array(
            [_to_array_mask(z, op.n_qubits) for _, z, _ in triples], dtype=np.int64
        )

    @property
    def n_terms(self) -> int:
        return self.coeffs.size

    def _chunk(self) -> int:
        return max(1, _CHUNK_ELEMENTS // self.dim)

    def per_term_expectations(self, psi: np.ndarray) -> np.ndarray:
        """<psi|P_t|psi> for every term, as a float array (terms are Hermitian)."""
        idx = np.arange(self.dim, dtype=np.int64)
        bra = psi.conj()
        out = np.empty(self.n_terms, dtype=complex)
        step = self._chunk()
        for start in range(0, self.n_terms, step):
            stop = min(start + step, self.n_terms)
            src = idx[None, :] ^ self.x_masks[start:stop, None]
            parity = np.bitwise_count(src & self.z_masks[start:stop, None]) & 1
            signs = 1.0 - 2.0 * parity
            vals = (signs * psi[src]) @ bra
            out[start:stop] = self.phases[start:stop] * vals
        return out.real

    def expectation(self, psi: np.ndarray) -> float:
        """<psi|op|psi> assuming a Hermitian operator (real result)."""
        values = self.per_term_expectations(psi)
        return float(np.real(self.coeffs @ values))

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """op |psi> as a new array."""
        idx = np.arange(self.dim, dtype=np.int64)
        out = np.zeros(self.dim, dtype=complex)
        step = self._chunk()
        weights = self.coeffs * self.phases
        for start in range(0, self.n_terms, step):
            stop = min(start + step, self.n_terms)
            src = idx[None, :] ^ self.x_masks[start:stop, None]
            parity = np.bitwise_count(src & self.z_masks[start:stop, None]) & 1
            signs = 1.0 - 2.0 * parity
            out += weights[start:stop] @ (signs * psi[src])
        return out


def compiled(op: PauliSum) -> CompiledPauliSum:
    """Compiled form of ``op``, cached on the operator instance."""
    cache = op._compiled
    if cache is None:
        cache = CompiledPauliSum(op)
        op._compiled = cache
    return cache


def expectation(op: PauliSum, psi: np.ndarray) -> float:
    return compiled(op).expectation(psi)


def determinant_index(occupation: Sequence[int], n_qubits: int) -> int:
    """Array index of the computational basis state with the given qubits at |1>."""
    index = 0
    for q in occupation:
        if not 0 <= q < n_qubits:
            raise ValueError(f"occupied qubit {q} outside register of {n_qubits}")
        index |= 1 << (n_qubits - 1 - q)
    return index


def reference_state(occupation: Sequence[int], n_qubits: int) -> np.ndarray:
    """Basis state with |1> on each occupied qubit (Z-expectation -1 there)."""
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[determinant_index(occupation, n_qubits)] = 1.0
    return psi


def excited_determinant(
    occupation: Sequence[int], exc: Excitation
) -> tuple[int, tuple[int, ...]]:
    """Occupation and fermionic sign of tau_mu applied to a determinant.

    The sign follows the Jordan-Wigner convention (Z-strings on lower qubit
    indices), so the returned phase matches the statevector pipeline exactly.
    """
    mask = 0
    for q in occupation:
        mask |= 1 << q
    sign = 1
    for p, creation in reversed(exc.ladder_ops()):
        bit = 1 << p
        if creation == bool(mask & bit):
            raise ValueError(f"excitation {exc} annihilates occupation {tuple(occupation)}")
        if (mask & (bit - 1)).bit_count() & 1:
            sign = -sign
        mask ^= bit
    new_occ = tuple(q for q in range(mask.bit_length()) if (mask >> q) & 1)
    return sign, new_occ


def excited_state(
    occupation: Sequence[int], exc: Excitation, n_qubits: int
) -> np.ndarray:
    """Statevector of tau_mu |Phi_0>, phase included."""
    sign, new_occ = excited_determinant(occupation, exc)
    psi = np.zeros(1 << n_qubits, dtype=complex)
    psi[determinant_index(new_occ, n_qubits)] = float(sign)
    return psi


@lru_cache(maxsize=None)
def _rotation_plan(
    exc: Excitation, n_qubits: int
) -> tuple[tuple[int, int, complex, float], ...]:
    """Per-Pauli-term (x_arr, z_arr, letter phase, beta) for exp(theta*kappa).

    kappa = sum_k i*beta_k P_k with real beta_k and mutually commuting
    Hermitian strings P_k, so the exponential factorizes exactly into
    single-Pauli rotations exp(i*theta*beta_k P_k) applied in any order.
    """
    kappa = kappa_to_pauli(exc, n_qubits)
    plan = []
    for x, z, coeff in kappa.mask_items():
        if abs(coeff.real) > 1e-14:
            raise AssertionError("generator coefficients must be purely imaginary")
        phase = 1j ** ((x & z).bit_count() % 4)
        plan.append(
            (
                _to_array_mask(x, n_qubits),
                _to_array_mask(z, n_qubits),
                complex(phase),
                float(coeff.imag),
            )
        )
    return tuple(plan)


def _apply_rotation_term(
    psi: np.ndarray,
    idx: np.ndarray,
    x_arr: int,
    z_arr: int,
    phase: complex,
    angle: float,
) -> np.ndarray:
    """exp(i*angle*P)|psi> for one Hermitian Pauli string P = phase * XZ-form.

    Amplitudes live on the last axis; leading axes (e.g. a batch of
    trajectories) broadcast through unchanged.
    """
    src = idx ^ x_arr
    parity = np.bitwise_count(src & z_arr) & 1
    signs = 1.0 - 2.0 * parity
    rotated = phase * (signs * psi[..., src])
    return np.cos(angle) * psi + 1j * np.sin(angle) * rotated


def apply_excitation_rotation(
    psi: np.ndarray, exc: Excitation, theta: float, n_qubits: int
) -> np.ndarray:
    """exp(theta * kappa_mu) |psi> via exact commuting-Pauli factorization.

    Accepts a single statevector or any ...x dim stack of them.
    """
    if theta == 0.0:
        return psi.copy()
    idx = np.arange(psi.shape[-1], dtype=np.int64)
    out = psi
    for x_arr, z_arr, phase, beta in _rotation_plan(exc, n_qubits):
        out = _apply_rotation_term(out, idx, x_arr, z_arr, phase, theta * beta)
    return out


@dataclass(frozen=True)
class OrderedAnsatz:
    """Ordered product of excitation-generator exponentials.

    ``excitations`` is written left-to-right as the operator product reads;
    application to a ket therefore starts from the last entry.  Parameters
    align index-for-index with ``excitations``.
    """

    n_qubits: int
    excitations: tuple[Excitation, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "excitations", tuple(self.excitations))

    @property
    def n_parameters(self) -> int:
        return len(self.excitations)

    def _check(self, params: Sequence[float]) -> np.ndarray:
        arr = np.asarray(params, dtype=float)
        if arr.shape != (self.n_parameters,):
            raise ValueError(
                f"expected {self.n_parameters} parameters, got shape {arr.shape}"
            )
        return arr

    def apply(self, psi: np.ndarray, params: Sequence[float]) -> np.ndarray:
        """U(theta) |psi>: rightmost factor acts first."""
        arr = self._check(params)
        out = psi
        for exc, theta in zip(reversed(self.excitations), arr[::-1]):
            out = apply_excitation_rotation(out, exc, float(theta), self.n_qubits)
        return out

    def apply_adjoint(self, psi: np.ndarray, params: Sequence[float]) -> np.ndarray:
        """U(theta)^dag |psi>: leftmost factor, negated angle, acts first."""
        arr = self._check(params)
        out = psi
        for exc, theta in zip(self.excitations, arr):
            out = apply_excitation_rotation(out, exc, -float(theta), self.n_qubits)
        return out

    def subset(self, indices: Sequence[int]) -> "OrderedAnsatz":
        """New ansatz from the listed positions, order preserved."""
        return OrderedAnsatz(
            self.n_qubits, tuple(self.excitations[i] for i in indices)
        )


def omega_state(
    occupation: Sequence[int], exc: Excitation, angle: float, n_qubits: int
) -> np.ndarray:
    """exp(angle * kappa_mu) |Phi_0>: the interference state used by the
    measurable residue form (angle pi/4 gives equal reference/excited weight)."""
    return apply_excitation_rotation(
        reference_state(occupation, n_qubits), exc, angle, n_qubits
    )
