"""Molecular and lattice Hamiltonian containers in spatial and spin-orbital form.

Spin orbitals interleave spatial orbitals: index 2p is the alpha spin of
spatial orbital p, index 2p+1 the beta spin.  The reference determinant
occupies the lowest ``nelec`` spin orbitals.  Two-electron integrals are kept
in two conventions: chemist (pq|rs) on spatial orbitals as parsed from disk,
and the antisymmetrized physicist form <pq||rs> on spin orbitals used by all
downstream matrix elements.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .operators import Excitation

__all__ = [
    "MolecularIntegrals",
    "SpinOrbitalHamiltonian",
    "OrbitalEnergies",
    "DegenerateDenominatorError",
    "NonCanonicalOrbitalsWarning",
    "spatial_to_spin_orbital",
    "build_hubbard_chain",
    "fock_matrix",
    "compute_fock",
    "mp2_denominator",
    "hartree_fock_energy",
]

# Denominators smaller than this indicate a (near-)degenerate reference for
# which the quasi-Newton update and the MP2 start are ill-defined.
DEGENERACY_THRESHOLD = 1e-8

# Off-diagonal Fock elements beyond this mean the orbitals are not canonical
# and the diagonal-Fock approximations downstream lose their exactness.
CANONICAL_FOCK_TOLERANCE = 1e-6


class DegenerateDenominatorError(ValueError):
    """Raised when an orbital-energy denominator is too close to zero."""


class NonCanonicalOrbitalsWarning(UserWarning):
    """Emitted when a Fock matrix has significant off-diagonal elements."""


@dataclass(frozen=True)
class MolecularIntegrals:
    """Spatial-orbital integrals: core scalar, one-electron matrix, and
    two-electron tensor in chemist (pq|rs) convention with full 8-fold
    permutational symmetry."""

    norb: int
    nelec: int
    core_energy: float
    h1: np.ndarray
    g2: np.ndarray
    ms2: int = 0

    def __post_init__(self) -> None:
        h1 = np.asarray(self.h1, dtype=float)
        g2 = np.asarray(self.g2, dtype=float)
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "g2", g2)
        n = self.norb
        if n < 1:
            raise ValueError("at least one spatial orbital required")
        if h1.shape != (n, n):
            raise ValueError(f"h1 must be {n}x{n}, got {h1.shape}")
        if g2.shape != (n, n, n, n):
            raise ValueError(f"g2 must be rank-4 of dimension {n}, got {g2.shape}")
        if not 0 <= self.nelec <= 2 * n:
            raise ValueError("electron count outside 0..2*norb")
        if np.abs(h1 - h1.T).max() > 1e-10:
            raise ValueError("one-electron integrals are not symmetric")


@dataclass(frozen=True)
class SpinOrbitalHamiltonian:
    """Second-quantized Hamiltonian over interleaved spin orbitals.

    ``g2_anti[p, q, r, s]`` holds the antisymmetrized physicist integral
    <pq||rs>; ``occupation`` lists the reference-determinant spin orbitals.
    """

    n_so: int
    core_energy: float
    h1_so: np.ndarray
    g2_anti: np.ndarray
    occupation: tuple[int, ...]

    def __post_init__(self) -> None:
        h1 = np.asarray(self.h1_so, dtype=float)
        g2 = np.asarray(self.g2_anti, dtype=float)
        object.__setattr__(self, "h1_so", h1)
        object.__setattr__(self, "g2_anti", g2)
        object.__setattr__(self, "occupation", tuple(int(p) for p in self.occupation))
        n = self.n_so
        if h1.shape != (n, n) or g2.shape != (n, n, n, n):
            raise ValueError("integral array shapes do not match n_so")
        if any(not 0 <= p < n for p in self.occupation):
            raise ValueError("occupation index outside spin-orbital range")
        if len(set(self.occupation)) != len(self.occupation):
            raise ValueError("repeated occupation index")

    @property
    def nelec(self) -> int:
        return len(self.occupation)

    @property
    def virtuals(self) -> tuple[int, ...]:
        occ = set(self.occupation)
        return tuple(p for p in range(self.n_so) if p not in occ)


@dataclass(frozen=True)
class OrbitalEnergies:
    """Per-spin-orbital energies (Fock diagonal) plus the reference occupation
    they were computed against."""

    eps: np.ndarray
    occupation: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps", np.asarray(self.eps, dtype=float))
        object.__setattr__(self, "occupation", tuple(int(p) for p in self.occupation))


def spatial_to_spin_orbital(mi: MolecularIntegrals) -> SpinOrbitalHamiltonian:
    """Lift spatial integrals to interleaved spin orbitals.

    One-electron blocks are diagonal in spin; the two-electron tensor becomes
    <pq||rs> = <pq|rs> - <pq|sr> with <pq|rs> = (pr|qs) under matching spins.
    The reference occupies the lowest ``nelec`` spin orbitals.
    """
    if mi.nelec > 2 * mi.norb:
        raise ValueError("electron count exceeds spin-orbital capacity")
    n_so = 2 * mi.norb
    so = np.arange(n_so)
    spatial = so // 2
    spin = so % 2

    h1_so = np.zeros((n_so, n_so))
    same_spin = spin[:, None] == spin[None, :]
    h1_so[same_spin] = mi.h1[spatial[:, None], spatial[None, :]][same_spin]

    # coulomb[p,q,r,s] = <pq|rs> = (p r | q s) with spin deltas (p,r) and (q,s)
    expanded = mi.g2[np.ix_(spatial, spatial, spatial, spatial)].transpose(0, 2, 1, 3)
    delta_pr = (spin[:, None] == spin[None, :]).astype(float)
    coulomb = expanded * delta_pr[:, None, :, None] * delta_pr[None, :, None, :]
    g2_anti = coulomb - coulomb.transpose(0, 1, 3, 2)

    return SpinOrbitalHamiltonian(
        n_so=n_so,
        core_energy=float(mi.core_energy),
        h1_so=h1_so,
        g2_anti=g2_anti,
        occupation=tuple(range(mi.nelec)),
    )


def build_hubbard_chain(
    sites: int, t: float, u: float, nelec: int
) -> tuple[SpinOrbitalHamiltonian, OrbitalEnergies]:
    """Open-boundary Hubbard chain rotated into its one-body eigenbasis.

    Hopping -t between neighboring sites and on-site repulsion U, expressed as
    spatial integrals, then transformed so the one-electron matrix is diagonal
    and the lowest orbitals are occupied.  Returns the spin-orbital
    Hamiltonian together with its Fock-diagonal orbital energies.
    """
    if sites < 1:
        raise ValueError("need at least one site")
    if not 0 <= nelec <= 2 * sites:
        raise ValueError("electron count outside 0..2*sites")
    hop = np.zeros((sites, sites))
    for i in range(sites - 1):
        hop[i, i + 1] = hop[i + 1, i] = -float(t)
    eri = np.zeros((sites, sites, sites, sites))
    for i in range(sites):
        eri[i, i, i, i] = float(u)

    eigval, coeff = np.linalg.eigh(hop)
    h1_mo = coeff.T @ hop @ coeff
    eri_mo = np.einsum("pi,qj,rk,sl,pqrs->ijkl", coeff, coeff, coeff, coeff, eri, optimize=True)
    mi = MolecularIntegrals(
        norb=sites, nelec=nelec, core_energy=0.0, h1=h1_mo, g2=eri_mo
    )
    h_so = spatial_to_spin_orbital(mi)
    return h_so, compute_fock(h_so)


def fock_matrix(h: SpinOrbitalHamiltonian) -> np.ndarray:
    """Mean-field operator F_pq = h_pq + sum_{i in occ} <pi||qi>."""
    occ = list(h.occupation)
    return h.h1_so + np.einsum("piqi->pq", h.g2_anti[:, occ][:, :, :, occ])


def compute_fock(h: SpinOrbitalHamiltonian) -> OrbitalEnergies:
    """Diagonal Fock elements eps_p = h_pp + sum_{i in occ} <pi||pi>.

    Warns when any off-diagonal Fock element exceeds the canonical-orbital
    tolerance, since downstream denominator formulas assume a diagonal F.
    """
    f = fock_matrix(h)
    off = f - np.diag(np.diag(f))
    worst = np.abs(off).max() if off.size else 0.0
    if worst > CANONICAL_FOCK_TOLERANCE:
        warnings.warn(
            f"off-diagonal Fock element {worst:.3e} exceeds "
            f"{CANONICAL_FOCK_TOLERANCE:g}; orbitals are not canonical",
            NonCanonicalOrbitalsWarning,
            stacklevel=2,
        )
    return OrbitalEnergies(eps=np.diag(f).copy(), occupation=h.occupation)


def mp2_denominator(exc: Excitation, eps: OrbitalEnergies) -> float:
    """Orbital-energy denominator D = sum(eps_occ) - sum(eps_virt).

    Negative for a gapped canonical reference; the sign makes the
    diagonal-Fock commutator identity <Phi_mu|[F, kappa_mu]|Phi_0> = -D exact,
    so the quasi-Newton update theta += r/D is contractive.
    """
    energies = eps.eps
    for p in exc.occ + exc.virt:
        if not 0 <= p < energies.size:
            raise ValueError(f"excitation index {p} outside orbital range")
    value = float(sum(energies[i] for i in exc.occ) - sum(energies[a] for a in exc.virt))
    if abs(value) < DEGENERACY_THRESHOLD:
        raise DegenerateDenominatorError(
            f"denominator {value:.3e} for excitation {exc} is below "
            f"{DEGENERACY_THRESHOLD:g}; reference is degenerate"
        )
    return value


def hartree_fock_energy(h: SpinOrbitalHamiltonian) -> float:
    """Closed-form reference energy core + sum_occ h_ii + 1/2 sum_{ij} <ij||ij>."""
    occ = list(h.occupation)
    one_body = float(np.sum(h.h1_so[occ, occ]))
    two_body = 0.5 * float(np.einsum("ijij->", h.g2_anti[np.ix_(occ, occ, occ, occ)]))
    return h.core_energy + one_body + two_body
