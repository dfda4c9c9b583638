"""Minimal-basis (STO-3G) Gaussian shells for the elements used by the
fixture systems (H, O), expanded into normalized contracted Cartesian
functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["BasisFunction", "build_basis", "SUPPORTED_BASIS"]

SUPPORTED_BASIS = "STO-3G"

# STO-3G exponents and contraction coefficients (EMSL Basis Set Exchange).
# Each entry: list of shells; a shell is (angular kind, exponents, coefficients)
# with kind "s" or "sp" (shared exponents for the 2s/2p pair).
_STO3G: dict[str, list[tuple[str, list[float], list[float] | tuple[list[float], list[float]]]]] = {
    "H": [
        ("s", [3.42525091, 0.62391373, 0.16885540], [0.15432897, 0.53532814, 0.44463454]),
    ],
    "O": [
        ("s", [130.7093200, 23.8088610, 6.4436083], [0.15432897, 0.53532814, 0.44463454]),
        (
            "sp",
            [5.0331513, 1.1695961, 0.3803890],
            ([-0.09996723, 0.39951283, 0.70011547], [0.15591627, 0.60768372, 0.39195739]),
        ),
    ],
}

ATOMIC_NUMBER = {"H": 1, "O": 8}


@dataclass(frozen=True)
class BasisFunction:
    """Contracted Cartesian Gaussian: sum_k c_k x^l y^m z^n exp(-a_k r^2)."""

    center: tuple[float, float, float]
    lmn: tuple[int, int, int]
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]


def _double_factorial(n: int) -> int:
    return 1 if n <= 0 else n * _double_factorial(n - 2)


def _primitive_norm(alpha: float, lmn: tuple[int, int, int]) -> float:
    l, m, n = lmn
    angular = _double_factorial(2 * l - 1) * _double_factorial(2 * m - 1) * _double_factorial(2 * n - 1)
    return (
        (2.0 * alpha / math.pi) ** 0.75
        * (4.0 * alpha) ** ((l + m + n) / 2.0)
        / math.sqrt(angular)
    )


def _contracted(
    center: tuple[float, float, float],
    lmn: tuple[int, int, int],
    exponents: list[float],
    coefficients: list[float],
) -> BasisFunction:
    """Normalize primitives, then rescale the contraction to unit self-overlap."""
    l, m, n = lmn
    total_l = l + m + n
    scaled = [c * _primitive_norm(a, lmn) for a, c in zip(exponents, coefficients)]
    # self-overlap of the contracted function (same center, same lmn)
    overlap = 0.0
    angular = (
        _double_factorial(2 * l - 1)
        * _double_factorial(2 * m - 1)
        * _double_factorial(2 * n - 1)
    )
    for ai, ci in zip(exponents, scaled):
        for aj, cj in zip(exponents, scaled):
            p = ai + aj
            s = (math.pi / p) ** 1.5 * angular / (2.0 * p) ** total_l
            overlap += ci * cj * s
    scale = 1.0 / math.sqrt(overlap)
    return BasisFunction(
        center=center,
        lmn=lmn,
        exponents=tuple(exponents),
        coefficients=tuple(c * scale for c in scaled),
    )


def build_basis(
    atoms: list[tuple[str, tuple[float, float, float]]], basis: str = SUPPORTED_BASIS
) -> list[BasisFunction]:
    """Basis functions for a geometry given in bohr, in atom-then-shell order
    (p shells expand as x, y, z)."""
    if basis.upper() != SUPPORTED_BASIS:
        raise ValueError(f"basis {basis!r} unavailable; only {SUPPORTED_BASIS} is built in")
    functions: list[BasisFunction] = []
    for element, center in atoms:
        try:
            shells = _STO3G[element]
        except KeyError:
            raise ValueError(f"element {element!r} not in the built-in {SUPPORTED_BASIS} table") from None
        for kind, exponents, coefficients in shells:
            if kind == "s":
                functions.append(_contracted(center, (0, 0, 0), exponents, coefficients))
            elif kind == "sp":
                s_coeff, p_coeff = coefficients
                functions.append(_contracted(center, (0, 0, 0), exponents, s_coeff))
                for lmn in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
                    functions.append(_contracted(center, lmn, exponents, p_coeff))
            else:
                raise ValueError(f"unsupported shell kind {kind!r}")
    return functions


def nuclear_charges(atoms: list[tuple[str, tuple[float, float, float]]]) -> np.ndarray:
    return np.array([ATOMIC_NUMBER[element] for element, _ in atoms], dtype=float)
