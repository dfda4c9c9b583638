"""Fixture generation driver: geometry in, FCIDUMP plus reference sidecar out."""

from __future__ import annotations

import json
import math
import platform
from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path

import numpy as np
import scipy

from .basis import build_basis, nuclear_charges
from .fci import fci_ground_energy
from .integrals import (
    electron_repulsion_tensor,
    kinetic_matrix,
    nuclear_attraction_matrix,
    nuclear_repulsion,
    overlap_matrix,
)
from .scf import run_rhf

__all__ = ["GeometrySpec", "builtin_systems", "generate"]

GENERATOR_VERSION = "0.1.0"
BOHR_PER_ANGSTROM = 1.0 / 0.529177210903


@dataclass(frozen=True)
class GeometrySpec:
    """Molecular system definition: elements with angstrom coordinates."""

    name: str
    atoms: tuple[tuple[str, tuple[float, float, float]], ...]
    basis: str = "STO-3G"
    charge: int = 0
    multiplicity: int = 1

    def __post_init__(self) -> None:
        if self.multiplicity != 1:
            raise ValueError("only singlet references are supported")

    @property
    def nelec(self) -> int:
        from .basis import ATOMIC_NUMBER

        return sum(ATOMIC_NUMBER[element] for element, _ in self.atoms) - self.charge

    def atoms_bohr(self) -> list[tuple[str, tuple[float, float, float]]]:
        return [
            (element, tuple(c * BOHR_PER_ANGSTROM for c in coords))
            for element, coords in self.atoms
        ]


def _hydrogen_chain(name: str, n_atoms: int, spacing: float) -> GeometrySpec:
    return GeometrySpec(
        name=name,
        atoms=tuple(
            ("H", (0.0, 0.0, round(i * spacing, 10))) for i in range(n_atoms)
        ),
    )


def _water() -> GeometrySpec:
    bond = 0.958
    half_angle = math.radians(104.4776) / 2.0
    x = bond * math.sin(half_angle)
    z = bond * math.cos(half_angle)
    return GeometrySpec(
        name="h2o",
        atoms=(
            ("O", (0.0, 0.0, 0.0)),
            ("H", (x, 0.0, z)),
            ("H", (-x, 0.0, z)),
        ),
    )


def builtin_systems() -> dict[str, GeometrySpec]:
    return {
        "h2_r0750": _hydrogen_chain("h2_r0750", 2, 0.75),
        "h4_r0750": _hydrogen_chain("h4_r0750", 4, 0.75),
        "h4_r1000": _hydrogen_chain("h4_r1000", 4, 1.00),
        "h4_r1500": _hydrogen_chain("h4_r1500", 4, 1.50),
        "h6_r1500": _hydrogen_chain("h6_r1500", 6, 1.50),
        "h2o": _water(),
    }


def _write_fcidump(
    path: Path,
    norb: int,
    nelec: int,
    core_energy: float,
    h1: np.ndarray,
    eri: np.ndarray,
    threshold: float = 1e-14,
) -> None:
    with open(path, "w", encoding="ascii") as out:
        orbsym = ",".join(["1"] * norb)
        out.write(f"&FCI NORB={norb},NELEC={nelec},MS2=0,\n")
        out.write(f"  ORBSYM={orbsym},\n")
        out.write("  ISYM=1,\n")
        out.write("&END\n")
        for i in range(1, norb + 1):
            for j in range(1, i + 1):
                ij = i * (i + 1) // 2 + j
                for k in range(1, i + 1):
                    for l in range(1, (j if k == i else k) + 1):
                        value = float(eri[i - 1, j - 1, k - 1, l - 1])
                        if abs(value) > threshold:
                            out.write(f"{value: .16E} {i:4d} {j:4d} {k:4d} {l:4d}\n")
        for i in range(1, norb + 1):
            for j in range(1, i + 1):
                value = float(h1[i - 1, j - 1])
                if abs(value) > threshold:
                    out.write(f"{value: .16E} {i:4d} {j:4d} {0:4d} {0:4d}\n")
        out.write(f"{core_energy: .16E} {0:4d} {0:4d} {0:4d} {0:4d}\n")


def generate(spec: GeometrySpec, out_dir: str | PathLike) -> tuple[Path, Path]:
    """Run RHF and FCI for ``spec``; write ``<name>.fcidump`` and
    ``<name>.json`` into ``out_dir`` and return both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    atoms = spec.atoms_bohr()
    basis = build_basis(atoms, spec.basis)
    charges = nuclear_charges(atoms)
    overlap = overlap_matrix(basis)
    hcore = kinetic_matrix(basis) + nuclear_attraction_matrix(basis, atoms, charges)
    eri = electron_repulsion_tensor(basis)
    nuclear = nuclear_repulsion(atoms, charges)

    scf = run_rhf(overlap, hcore, eri, spec.nelec, nuclear)

    coeff = scf.mo_coefficients
    h1_mo = coeff.T @ hcore @ coeff
    eri_mo = np.einsum(
        "mp,nq,lr,os,mnlo->pqrs", coeff, coeff, coeff, coeff, eri, optimize=True
    )
    fci = fci_ground_energy(h1_mo, eri_mo, spec.nelec, nuclear)

    fcidump_path = out / f"{spec.name}.fcidump"
    _write_fcidump(fcidump_path, len(basis), spec.nelec, nuclear, h1_mo, eri_mo)

    sidecar = {
        "system": spec.name,
        "basis": spec.basis,
        "charge": spec.charge,
        "multiplicity": spec.multiplicity,
        "geometry": {
            "units": "angstrom",
            "atoms": [[element, list(coords)] for element, coords in spec.atoms],
        },
        "nelec": spec.nelec,
        "norb": len(basis),
        "scf_energy": scf.energy,
        "fci_energy": fci,
        "generator": {
            "package": "fixturegen",
            "version": GENERATOR_VERSION,
            "method": "RHF + string FCI, McMurchie-Davidson STO-3G integrals",
            "scf_iterations": scf.n_iterations,
            "versions": {
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
        },
    }
    sidecar_path = out / f"{spec.name}.json"
    with open(sidecar_path, "w", encoding="ascii") as handle:
        json.dump(sidecar, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return fcidump_path, sidecar_path
