"""Molecular integrals over contracted Cartesian Gaussians via the
McMurchie-Davidson scheme (Hermite expansion coefficients plus Boys-function
auxiliary tensors).  Adequate for s/p minimal bases at fixture scale; clarity
over speed throughout."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import hyp1f1

from .basis import BasisFunction

__all__ = [
    "overlap_matrix",
    "kinetic_matrix",
    "nuclear_attraction_matrix",
    "electron_repulsion_tensor",
    "nuclear_repulsion",
]


def _boys(n: int, x: float) -> float:
    return float(hyp1f1(n + 0.5, n + 1.5, -x)) / (2.0 * n + 1.0)


def _hermite_coefficient(
    i: int, j: int, t: int, q_x: float, a: float, b: float
) -> float:
    """1D Hermite expansion coefficient E_t^{ij} for exponents a, b separated
    by q_x = A_x - B_x."""
    p = a + b
    mu = a * b / p
    if t < 0 or t > i + j:
        return 0.0
    if i == j == t == 0:
        return math.exp(-mu * q_x * q_x)
    if j == 0:
        return (
            (1.0 / (2.0 * p)) * _hermite_coefficient(i - 1, j, t - 1, q_x, a, b)
            - (mu * q_x / a) * _hermite_coefficient(i - 1, j, t, q_x, a, b)
            + (t + 1) * _hermite_coefficient(i - 1, j, t + 1, q_x, a, b)
        )
    return (
        (1.0 / (2.0 * p)) * _hermite_coefficient(i, j - 1, t - 1, q_x, a, b)
        + (mu * q_x / b) * _hermite_coefficient(i, j - 1, t, q_x, a, b)
        + (t + 1) * _hermite_coefficient(i, j - 1, t + 1, q_x, a, b)
    )


def _overlap_primitive(
    a: float,
    lmn1: tuple[int, int, int],
    pos1: tuple[float, float, float],
    b: float,
    lmn2: tuple[int, int, int],
    pos2: tuple[float, float, float],
) -> float:
    p = a + b
    value = (math.pi / p) ** 1.5
    for axis in range(3):
        value *= _hermite_coefficient(
            lmn1[axis], lmn2[axis], 0, pos1[axis] - pos2[axis], a, b
        )
    return value


def _kinetic_primitive(
    a: float,
    lmn1: tuple[int, int, int],
    pos1: tuple[float, float, float],
    b: float,
    lmn2: tuple[int, int, int],
    pos2: tuple[float, float, float],
) -> float:
    l2, m2, n2 = lmn2

    def s(dl: int, dm: int, dn: int) -> float:
        shifted = (l2 + dl, m2 + dm, n2 + dn)
        if min(shifted) < 0:
            return 0.0
        return _overlap_primitive(a, lmn1, pos1, b, shifted, pos2)

    term0 = b * (2.0 * (l2 + m2 + n2) + 3.0) * s(0, 0, 0)
    term1 = -2.0 * b * b * (s(2, 0, 0) + s(0, 2, 0) + s(0, 0, 2))
    term2 = -0.5 * (
        l2 * (l2 - 1) * s(-2, 0, 0)
        + m2 * (m2 - 1) * s(0, -2, 0)
        + n2 * (n2 - 1) * s(0, 0, -2)
    )
    return term0 + term1 + term2


def _hermite_auxiliary(
    t: int, u: int, v: int, n: int, p: float, pc: tuple[float, float, float]
) -> float:
    """Auxiliary integral R^n_{tuv} built on Boys functions."""
    if t == u == v == 0:
        return (-2.0 * p) ** n * _boys(n, p * (pc[0] ** 2 + pc[1] ** 2 + pc[2] ** 2))
    if t > 0:
        value = pc[0] * _hermite_auxiliary(t - 1, u, v, n + 1, p, pc)
        if t > 1:
            value += (t - 1) * _hermite_auxiliary(t - 2, u, v, n + 1, p, pc)
        return value
    if u > 0:
        value = pc[1] * _hermite_auxiliary(t, u - 1, v, n + 1, p, pc)
        if u > 1:
            value += (u - 1) * _hermite_auxiliary(t, u - 2, v, n + 1, p, pc)
        return value
    value = pc[2] * _hermite_auxiliary(t, u, v - 1, n + 1, p, pc)
    if v > 1:
        value += (v - 1) * _hermite_auxiliary(t, u, v - 2, n + 1, p, pc)
    return value


def _gaussian_product_center(
    a: float, pos1: tuple[float, float, float], b: float, pos2: tuple[float, float, float]
) -> tuple[float, float, float]:
    p = a + b
    return tuple((a * pos1[axis] + b * pos2[axis]) / p for axis in range(3))


def _nuclear_primitive(
    a: float,
    lmn1: tuple[int, int, int],
    pos1: tuple[float, float, float],
    b: float,
    lmn2: tuple[int, int, int],
    pos2: tuple[float, float, float],
    nucleus: tuple[float, float, float],
) -> float:
    p = a + b
    center = _gaussian_product_center(a, pos1, b, pos2)
    pc = tuple(center[axis] - nucleus[axis] for axis in range(3))
    value = 0.0
    for t in range(lmn1[0] + lmn2[0] + 1):
        ex = _hermite_coefficient(lmn1[0], lmn2[0], t, pos1[0] - pos2[0], a, b)
        for u in range(lmn1[1] + lmn2[1] + 1):
            ey = _hermite_coefficient(lmn1[1], lmn2[1], u, pos1[1] - pos2[1], a, b)
            for v in range(lmn1[2] + lmn2[2] + 1):
                ez = _hermite_coefficient(lmn1[2], lmn2[2], v, pos1[2] - pos2[2], a, b)
                value += ex * ey * ez * _hermite_auxiliary(t, u, v, 0, p, pc)
    return 2.0 * math.pi / p * value


def _eri_primitive(
    a: float,
    lmn1: tuple[int, int, int],
    pos1: tuple[float, float, float],
    b: float,
    lmn2: tuple[int, int, int],
    pos2: tuple[float, float, float],
    c: float,
    lmn3: tuple[int, int, int],
    pos3: tuple[float, float, float],
    d: float,
    lmn4: tuple[int, int, int],
    pos4: tuple[float, float, float],
) -> float:
    p = a + b
    q = c + d
    alpha = p * q / (p + q)
    center_p = _gaussian_product_center(a, pos1, b, pos2)
    center_q = _gaussian_product_center(c, pos3, d, pos4)
    pq = tuple(center_p[axis] - center_q[axis] for axis in range(3))

    value = 0.0
    for t in range(lmn1[0] + lmn2[0] + 1):
        e1x = _hermite_coefficient(lmn1[0], lmn2[0], t, pos1[0] - pos2[0], a, b)
        for u in range(lmn1[1] + lmn2[1] + 1):
            e1y = _hermite_coefficient(lmn1[1], lmn2[1], u, pos1[1] - pos2[1], a, b)
            for v in range(lmn1[2] + lmn2[2] + 1):
                e1z = _hermite_coefficient(lmn1[2], lmn2[2], v, pos1[2] - pos2[2], a, b)
                bra = e1x * e1y * e1z
                if bra == 0.0:
                    continue
                for tau in range(lmn3[0] + lmn4[0] + 1):
                    e2x = _hermite_coefficient(lmn3[0], lmn4[0], tau, pos3[0] - pos4[0], c, d)
                    for nu in range(lmn3[1] + lmn4[1] + 1):
                        e2y = _hermite_coefficient(lmn3[1], lmn4[1], nu, pos3[1] - pos4[1], c, d)
                        for phi in range(lmn3[2] + lmn4[2] + 1):
                            e2z = _hermite_coefficient(
                                lmn3[2], lmn4[2], phi, pos3[2] - pos4[2], c, d
                            )
                            ket = e2x * e2y * e2z
                            if ket == 0.0:
                                continue
                            sign = -1.0 if (tau + nu + phi) % 2 else 1.0
                            value += (
                                bra
                                * ket
                                * sign
                                * _hermite_auxiliary(t + tau, u + nu, v + phi, 0, alpha, pq)
                            )
    value *= 2.0 * math.pi ** 2.5 / (p * q * math.sqrt(p + q))
    return value


def _contract_pair(func, bf1: BasisFunction, bf2: BasisFunction, *extra) -> float:
    value = 0.0
    for a, ca in zip(bf1.exponents, bf1.coefficients):
        for b, cb in zip(bf2.exponents, bf2.coefficients):
            value += ca * cb * func(a, bf1.lmn, bf1.center, b, bf2.lmn, bf2.center, *extra)
    return value


def overlap_matrix(basis: list[BasisFunction]) -> np.ndarray:
    n = len(basis)
    s = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            s[i, j] = s[j, i] = _contract_pair(_overlap_primitive, basis[i], basis[j])
    return s


def kinetic_matrix(basis: list[BasisFunction]) -> np.ndarray:
    n = len(basis)
    t = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            t[i, j] = t[j, i] = _contract_pair(_kinetic_primitive, basis[i], basis[j])
    return t


def nuclear_attraction_matrix(
    basis: list[BasisFunction],
    atoms: list[tuple[str, tuple[float, float, float]]],
    charges: np.ndarray,
) -> np.ndarray:
    n = len(basis)
    v = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1):
            value = 0.0
            for (_, nucleus), charge in zip(atoms, charges):
                value -= charge * _contract_pair(
                    _nuclear_primitive, basis[i], basis[j], nucleus
                )
            v[i, j] = v[j, i] = value
    return v


def electron_repulsion_tensor(basis: list[BasisFunction]) -> np.ndarray:
    """Chemist-convention (ij|kl) tensor with 8-fold symmetry filled in."""
    n = len(basis)
    eri = np.zeros((n, n, n, n))

    def contracted(i: int, j: int, k: int, l: int) -> float:
        b1, b2, b3, b4 = basis[i], basis[j], basis[k], basis[l]
        value = 0.0
        for a, ca in zip(b1.exponents, b1.coefficients):
            for b, cb in zip(b2.exponents, b2.coefficients):
                for c, cc in zip(b3.exponents, b3.coefficients):
                    for d, cd in zip(b4.exponents, b4.coefficients):
                        value += ca * cb * cc * cd * _eri_primitive(
                            a, b1.lmn, b1.center,
                            b, b2.lmn, b2.center,
                            c, b3.lmn, b3.center,
                            d, b4.lmn, b4.center,
                        )
        return value

    for i in range(n):
        for j in range(i + 1):
            ij = i * (i + 1) // 2 + j
            for k in range(i + 1):
                for l in range(k + 1):
                    kl = k * (k + 1) // 2 + l
                    if kl > ij:
                        continue
                    value = contracted(i, j, k, l)
                    for (p, q, r, s) in (
                        (i, j, k, l),
                        (j, i, k, l),
                        (i, j, l, k),
                        (j, i, l, k),
                        (k, l, i, j),
                        (l, k, i, j),
                        (k, l, j, i),
                        (l, k, j, i),
                    ):
                        eri[p, q, r, s] = value
    return eri


def nuclear_repulsion(
    atoms: list[tuple[str, tuple[float, float, float]]], charges: np.ndarray
) -> float:
    value = 0.0
    for i in range(len(atoms)):
        for j in range(i):
            delta = np.array(atoms[i][1]) - np.array(atoms[j][1])
            value += charges[i] * charges[j] / float(np.linalg.norm(delta))
    return value
