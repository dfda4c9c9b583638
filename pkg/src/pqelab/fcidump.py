"""Reader and writer for the FCIDUMP integral interchange format.

The format is a Fortran-style ``&FCI`` namelist header (NORB and NELEC
required; MS2, ORBSYM, ISYM tolerated) closed by ``&END`` or ``/``, followed
by whitespace-separated ``value i j k l`` records with 1-based indices:

- four nonzero indices: chemist two-electron integral (ij|kl), stored under
  full 8-fold permutational symmetry;
- ``value i j 0 0``: one-electron integral h1[i, j] (symmetric);
- ``value 0 0 0 0``: scalar core energy.

Any other index pattern is rejected.  Re-specifying a slot is allowed only
when the values agree to 1e-12.
"""

from __future__ import annotations

import re
from os import PathLike
from typing import Iterable, TextIO

import numpy as np

from .hamiltonian import MolecularIntegrals

__all__ = ["FcidumpFormatError", "parse_fcidump", "read_fcidump_file", "write_fcidump"]

DUPLICATE_TOLERANCE = 1e-12

_NAMELIST_KEY = re.compile(r"([A-Za-z][A-Za-z0-9_]*)\s*=\s*([^=]*?)(?=(?:[,\s][A-Za-z][A-Za-z0-9_]*\s*=)|$)")


class FcidumpFormatError(ValueError):
    """Raised for malformed FCIDUMP content."""


def _two_electron_orbit(i: int, j: int, k: int, l: int) -> tuple[tuple[int, int, int, int], ...]:
    """All 8 chemist-convention index permutations of (ij|kl)."""
    return (
        (i, j, k, l),
        (j, i, k, l),
        (i, j, l, k),
        (j, i, l, k),
        (k, l, i, j),
        (l, k, i, j),
        (k, l, j, i),
        (l, k, j, i),
    )


def _parse_namelist(header: str) -> dict[str, str]:
    body = header.strip()
    if not body.upper().startswith("&FCI"):
        raise FcidumpFormatError("file must start with an &FCI namelist")
    body = body[4:]
    out: dict[str, str] = {}
    for match in _NAMELIST_KEY.finditer(body):
        out[match.group(1).upper()] = match.group(2).strip().rstrip(",")
    return out


def _require_int(fields: dict[str, str], key: str) -> int:
    if key not in fields:
        raise FcidumpFormatError(f"namelist is missing {key}")
    try:
        return int(fields[key])
    except ValueError:
        raise FcidumpFormatError(f"namelist {key}={fields[key]!r} is not an integer") from None


def parse_fcidump(text: str | Iterable[str]) -> MolecularIntegrals:
    """Parse FCIDUMP content from a string or an iterable of lines."""
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [str(line) for line in text]

    # The header may span several lines; it ends at "&END" or a line whose
    # stripped form is (or ends with) "/".
    header_parts: list[str] = []
    body_start = None
    for idx, raw in enumerate(lines):
        line = raw.strip()
        header_parts.append(line)
        upper = line.upper()
        if "&END" in upper or upper.endswith("/"):
            body_start = idx + 1
            break
    if body_start is None:
        raise FcidumpFormatError("namelist is never terminated by &END or /")
    header = " ".join(header_parts)
    header = re.sub(r"&END.*$", "", header, flags=re.IGNORECASE).rstrip()
    header = header.rstrip("/").rstrip()

    fields = _parse_namelist(header)
    norb = _require_int(fields, "NORB")
    nelec = _require_int(fields, "NELEC")
    ms2 = int(fields["MS2"]) if fields.get("MS2", "").strip() else 0
    if norb < 1:
        raise FcidumpFormatError("NORB must be positive")
    if not 0 <= nelec <= 2 * norb:
        raise FcidumpFormatError("NELEC outside 0..2*NORB")

    core_energy: float | None = None
    one_body: dict[tuple[int, int], float] = {}
    two_body: dict[tuple[int, int, int, int], float] = {}

    def check_range(indices: tuple[int, ...], line_no: int) -> None:
        for idx in indices:
            if not 1 <= idx <= norb:
                raise FcidumpFormatError(
                    f"line {line_no}: orbital index {idx} outside 1..{norb}"
                )

    def store(table: dict, key, value: float, line_no: int) -> None:
        old = table.get(key)
        if old is not None and abs(old - value) > DUPLICATE_TOLERANCE:
            raise FcidumpFormatError(
                f"line {line_no}: conflicting duplicate entry for {key}: "
                f"{old!r} vs {value!r}"
            )
        table[key] = value

    for line_no, raw in enumerate(lines[body_start:], start=body_start + 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise FcidumpFormatError(
                f"line {line_no}: expected 'value i j k l', got {line!r}"
            )
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(p) for p in parts[1:])
        except ValueError:
            raise FcidumpFormatError(f"line {line_no}: unparseable record {line!r}") from None
        nonzero = tuple(x for x in (i, j, k, l) if x != 0)
        if (i, j, k, l) == (0, 0, 0, 0):
            if core_energy is not None and abs(core_energy - value) > DUPLICATE_TOLERANCE:
                raise FcidumpFormatError(
                    f"line {line_no}: conflicting duplicate core energy"
                )
            core_energy = value
        elif len(nonzero) == 2 and k == 0 and l == 0:
            check_range((i, j), line_no)
            store(one_body, (min(i, j), max(i, j)), value, line_no)
        elif len(nonzero) == 4:
            check_range((i, j, k, l), line_no)
            canonical = min(_two_electron_orbit(i, j, k, l))
            store(two_body, canonical, value, line_no)
        else:
            raise FcidumpFormatError(
                f"line {line_no}: unsupported index pattern {(i, j, k, l)}"
            )

    h1 = np.zeros((norb, norb))
    for (i, j), value in one_body.items():
        h1[i - 1, j - 1] = value
        h1[j - 1, i - 1] = value
    g2 = np.zeros((norb, norb, norb, norb))
    for key, value in two_body.items():
        for (i, j, k, l) in _two_electron_orbit(*key):
            g2[i - 1, j - 1, k - 1, l - 1] = value

    return MolecularIntegrals(
        norb=norb,
        nelec=nelec,
        core_energy=0.0 if core_energy is None else core_energy,
        h1=h1,
        g2=g2,
        ms2=ms2,
    )


def read_fcidump_file(path: str | PathLike) -> MolecularIntegrals:
    with open(path, "r", encoding="ascii") as handle:
        return parse_fcidump(handle.read())


def write_fcidump(mi: MolecularIntegrals, target: str | PathLike | TextIO) -> None:
    """Serialize integrals to FCIDUMP; round-trips through ``parse_fcidump``.

    Emits one record per symmetry-unique slot (i>=j, k>=l, (ij)>=(kl) for the
    two-electron tensor), skipping exact zeros, then one-electron entries and
    the core energy.
    """
    if hasattr(target, "write"):
        _write_fcidump_stream(mi, target)  # type: ignore[arg-type]
    else:
        with open(target, "w", encoding="ascii") as handle:
            _write_fcidump_stream(mi, handle)


def _write_fcidump_stream(mi: MolecularIntegrals, out: TextIO) -> None:
    n = mi.norb
    orbsym = ",".join(["1"] * n)
    out.write(f"&FCI NORB={n},NELEC={mi.nelec},MS2={mi.ms2},\n")
    out.write(f"  ORBSYM={orbsym},\n")
    out.write("  ISYM=1,\n")
    out.write("&END\n")

    def record(value: float, i: int, j: int, k: int, l: int) -> None:
        out.write(f"{value: .16E} {i:4d} {j:4d} {k:4d} {l:4d}\n")

    for i in range(1, n + 1):
        for j in range(1, i + 1):
            for k in range(1, i + 1):
                l_top = j if k == i else k
                for l in range(1, l_top + 1):
                    value = float(mi.g2[i - 1, j - 1, k - 1, l - 1])
                    if value != 0.0:
                        record(value, i, j, k, l)
    for i in range(1, n + 1):
        for j in range(1, i + 1):
            value = float(mi.h1[i - 1, j - 1])
            if value != 0.0:
                record(value, i, j, 0, 0)
    record(float(mi.core_energy), 0, 0, 0, 0)
