"""Command line entry: system names (or a geometry file) in, fixtures out."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .generate import GeometrySpec, builtin_systems, generate
from .scf import ScfConvergenceError


def _spec_from_file(path: Path) -> GeometrySpec:
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    atoms = tuple(
        (str(element), tuple(float(c) for c in coords))
        for element, coords in payload["atoms"]
    )
    return GeometrySpec(
        name=str(payload.get("name", path.stem)),
        atoms=atoms,
        basis=str(payload.get("basis", "STO-3G")),
        charge=int(payload.get("charge", 0)),
        multiplicity=int(payload.get("multiplicity", 1)),
    )


def main(argv: list[str] | None = None) -> int:
    known = builtin_systems()
    parser = argparse.ArgumentParser(
        prog="fixturegen",
        description="Generate FCIDUMP fixtures and reference sidecars.",
    )
    parser.add_argument(
        "systems",
        nargs="*",
        help=f"built-in system names ({', '.join(sorted(known))}) or 'all'",
    )
    parser.add_argument(
        "--geometry", type=Path, help="JSON geometry file (name, atoms, basis, ...)"
    )
    parser.add_argument(
        "--out", type=Path, default=Path("fixtures"), help="output directory"
    )
    args = parser.parse_args(argv)

    specs: list[GeometrySpec] = []
    if args.geometry is not None:
        specs.append(_spec_from_file(args.geometry))
    names = list(args.systems)
    if names == ["all"]:
        names = sorted(known)
    for name in names:
        if name not in known:
            parser.error(f"unknown system {name!r}; choose from {sorted(known)} or 'all'")
        specs.append(known[name])
    if not specs:
        parser.error("nothing to generate: pass system names or --geometry")

    for spec in specs:
        try:
            fcidump_path, sidecar_path = generate(spec, args.out)
        except ScfConvergenceError as err:
            print(f"{spec.name}: SCF failed: {err}", file=sys.stderr)
            return 1
        print(f"{spec.name}: wrote {fcidump_path} and {sidecar_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
