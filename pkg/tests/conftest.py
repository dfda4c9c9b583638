"""Shared fixtures: small model Hamiltonians and random-integral factories."""

from __future__ import annotations

import json
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest

from pqelab.fcidump import read_fcidump_file
from pqelab.hamiltonian import (
    MolecularIntegrals,
    OrbitalEnergies,
    SpinOrbitalHamiltonian,
    build_hubbard_chain,
    compute_fock,
    spatial_to_spin_orbital,
)
from pqelab.operators import excitation_pool, hamiltonian_to_pauli

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"

# Chemist-convention (pq|rs) axis permutations of the 8-fold symmetry group.
EIGHTFOLD_AXES = [
    (0, 1, 2, 3),
    (1, 0, 2, 3),
    (0, 1, 3, 2),
    (1, 0, 3, 2),
    (2, 3, 0, 1),
    (3, 2, 0, 1),
    (2, 3, 1, 0),
    (3, 2, 1, 0),
]


def random_molecular_integrals(
    rng: np.random.Generator,
    norb: int,
    nelec: int,
    scale: float = 0.2,
    core: float | None = None,
) -> MolecularIntegrals:
    """Random symmetric integrals with full 8-fold two-electron symmetry."""
    h1 = rng.normal(scale=1.0, size=(norb, norb))
    h1 = 0.5 * (h1 + h1.T)
    g2 = rng.normal(scale=scale, size=(norb,) * 4)
    g2 = sum(g2.transpose(axes) for axes in EIGHTFOLD_AXES) / 8.0
    return MolecularIntegrals(
        norb=norb,
        nelec=nelec,
        core_energy=rng.normal() if core is None else core,
        h1=h1,
        g2=g2,
    )


def random_spin_orbital_hamiltonian(
    rng: np.random.Generator, norb: int, nelec: int, scale: float = 0.2
) -> SpinOrbitalHamiltonian:
    return spatial_to_spin_orbital(random_molecular_integrals(rng, norb, nelec, scale))


@pytest.fixture(scope="session")
def hubbard_dimer() -> tuple[SpinOrbitalHamiltonian, OrbitalEnergies]:
    """Half-filled two-site chain with t=1, U=4 (4 spin orbitals)."""
    return build_hubbard_chain(sites=2, t=1.0, u=4.0, nelec=2)


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


def load_fixture_system(name: str) -> SimpleNamespace:
    """Everything the solvers need for one bundled molecular system."""
    integrals = read_fcidump_file(FIXTURE_DIR / f"{name}.fcidump")
    sidecar = json.loads((FIXTURE_DIR / f"{name}.json").read_text())
    h = spatial_to_spin_orbital(integrals)
    return SimpleNamespace(
        h=h,
        eps=compute_fock(h),
        h_pauli=hamiltonian_to_pauli(h),
        pool=excitation_pool(h),
        sidecar=sidecar,
    )


@pytest.fixture(scope="session")
def h2_system() -> SimpleNamespace:
    return load_fixture_system("h2_r0750")


@pytest.fixture(scope="session")
def h4_system() -> SimpleNamespace:
    return load_fixture_system("h4_r0750")
