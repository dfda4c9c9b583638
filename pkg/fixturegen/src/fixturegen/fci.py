"""Full configuration interaction over alpha/beta occupation strings.

Works directly with spatial-orbital integrals in chemist (pq|rs) convention
and Slater-Condon rules; determinants are (alpha string, beta string) pairs
with the alpha block ordered before the beta block, so excitation phases
factorize per spin."""

from __future__ import annotations

from itertools import combinations

import numpy as np
import scipy.linalg

__all__ = ["fci_ground_energy"]


def _strings(norb: int, nocc: int) -> list[int]:
    out = []
    for occ in combinations(range(norb), nocc):
        mask = 0
        for p in occ:
            mask |= 1 << p
        out.append(mask)
    return out


def _bits(mask: int) -> list[int]:
    return [p for p in range(mask.bit_length()) if (mask >> p) & 1]


def _single_sign(mask: int, hole: int, particle: int) -> int:
    """Phase of moving one electron hole -> particle within a spin string."""
    low, high = (hole, particle) if hole < particle else (particle, hole)
    between = ((1 << high) - 1) ^ ((1 << (low + 1)) - 1)
    return -1 if (mask & between).bit_count() & 1 else 1


def _diagonal(h1: np.ndarray, eri: np.ndarray, alpha: list[int], beta: list[int]) -> float:
    value = sum(h1[p, p] for p in alpha) + sum(h1[p, p] for p in beta)
    for same in (alpha, beta):
        for i in same:
            for j in same:
                value += 0.5 * (eri[i, i, j, j] - eri[i, j, j, i])
    for i in alpha:
        for j in beta:
            value += eri[i, i, j, j]
    return float(value)


def _same_spin_single(
    h1: np.ndarray,
    eri: np.ndarray,
    mask: int,
    other_occ: list[int],
    hole: int,
    particle: int,
) -> float:
    value = h1[hole, particle]
    for j in _bits(mask & ~(1 << hole)):
        value += eri[hole, particle, j, j] - eri[hole, j, j, particle]
    for j in other_occ:
        value += eri[hole, particle, j, j]
    return float(value) * _single_sign(mask, hole, particle)


def _same_spin_double(
    eri: np.ndarray, mask: int, holes: list[int], particles: list[int]
) -> float:
    (i, j), (a, b) = holes, particles
    sign = _single_sign(mask, i, a)
    moved = mask ^ (1 << i) ^ (1 << a)
    sign *= _single_sign(moved, j, b)
    return sign * float(eri[i, a, j, b] - eri[i, b, j, a])


def fci_ground_energy(
    h1: np.ndarray, eri: np.ndarray, nelec: int, core_energy: float = 0.0
) -> float:
    """Lowest eigenvalue of the closed-shell-sector CI matrix plus core."""
    norb = h1.shape[0]
    if nelec % 2 != 0:
        raise ValueError("string CI here covers even electron counts only")
    nocc = nelec // 2
    strings = _strings(norb, nocc)
    n_str = len(strings)
    dim = n_str * n_str
    matrix = np.zeros((dim, dim))

    occ_cache = {mask: _bits(mask) for mask in strings}

    def alpha_beta_index(ia: int, ib: int) -> int:
        return ia * n_str + ib

    # Spin-resolved excitation tables: per pair of strings, degree and data.
    def classify(m1: int, m2: int):
        diff = m1 ^ m2
        degree = diff.bit_count() // 2
        if degree == 0:
            return 0, None
        holes = _bits(m1 & diff)
        particles = _bits(m2 & diff)
        return degree, (holes, particles)

    for ia1, a1 in enumerate(strings):
        for ib1, b1 in enumerate(strings):
            col = alpha_beta_index(ia1, ib1)
            for ia2, a2 in enumerate(strings):
                da, exc_a = classify(a1, a2)
                if da > 2:
                    continue
                for ib2, b2 in enumerate(strings):
                    db, exc_b = classify(b1, b2)
                    if da + db > 2:
                        continue
                    row = alpha_beta_index(ia2, ib2)
                    if row < col:
                        continue  # fill lower triangle once, mirror later
                    if da == 0 and db == 0:
                        value = _diagonal(h1, eri, occ_cache[a1], occ_cache[b1])
                    elif da == 1 and db == 0:
                        value = _same_spin_single(
                            h1, eri, a1, occ_cache[b1], exc_a[0][0], exc_a[1][0]
                        )
                    elif da == 0 and db == 1:
                        value = _same_spin_single(
                            h1, eri, b1, occ_cache[a1], exc_b[0][0], exc_b[1][0]
                        )
                    elif da == 2 and db == 0:
                        value = _same_spin_double(eri, a1, exc_a[0], exc_a[1])
                    elif da == 0 and db == 2:
                        value = _same_spin_double(eri, b1, exc_b[0], exc_b[1])
                    else:  # da == db == 1
                        (i,), (a,) = exc_a
                        (j,), (b,) = exc_b
                        value = (
                            _single_sign(a1, i, a)
                            * _single_sign(b1, j, b)
                            * float(eri[i, a, j, b])
                        )
                    matrix[row, col] = value
                    matrix[col, row] = value

    return float(scipy.linalg.eigvalsh(matrix)[0] + core_energy)
