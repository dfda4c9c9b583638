"""Pauli-string algebra, fermionic excitation descriptors, and the Jordan-Wigner map.

Conventions fixed across the package:

- Spin orbital p maps to qubit p.  Qubit 0 is the leftmost (most significant)
  position in basis-state labels.
- Spin orbitals interleave spatial orbitals: index 2p is the alpha spin of
  spatial orbital p, index 2p+1 the beta spin.
- Jordan-Wigner: a^dag_p -> (X_p - i Y_p)/2 tensored with Z on every qubit of
  index lower than p; occupied orbitals are |1>.
- Excited determinants carry the phase obtained by applying the normal-ordered
  ladder string of the excitation to the reference determinant, so that
  kappa_mu |Phi_0> = |Phi_mu> exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "PauliString",
    "PauliSum",
    "Excitation",
    "jordan_wigner",
    "ladder_pauli",
    "kappa_to_pauli",
    "excitation_pool",
    "hamiltonian_to_pauli",
    "number_operator",
]

# Coefficients with magnitude below this are dropped when a PauliSum is
# simplified; below the noise floor of every expectation evaluation downstream.
COEFF_DROP_THRESHOLD = 1e-12

_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)
_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_MASKS = {v: k for k, v in _LETTERS.items()}


def _n_y(x: int, z: int) -> int:
    """Number of Y letters in the (x, z) symplectic representation."""
    return (x & z).bit_count()


def _mul_masks(x1: int, z1: int, x2: int, z2: int) -> tuple[complex, int, int]:
    """Product of two Pauli letter strings; returns (phase, x, z).

    Letter strings are Hermitian; the phase of a product lies in {1, i, -1, -i}.
    """
    x, z = x1 ^ x2, z1 ^ z2
    k = (_n_y(x1, z1) + _n_y(x2, z2) - _n_y(x, z) + 2 * (z1 & x2).bit_count()) % 4
    return _PHASES[k], x, z


@dataclass(frozen=True)
class PauliString:
    """Tensor product of per-qubit letters from {I, X, Y, Z}.

    Stored symplectically: bit q of ``x_mask``/``z_mask`` refers to qubit q,
    with (0,0)=I, (1,0)=X, (1,1)=Y, (0,1)=Z.
    """

    n_qubits: int
    x_mask: int
    z_mask: int

    def __post_init__(self) -> None:
        limit = 1 << self.n_qubits
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError("Pauli masks exceed the qubit count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Build from a label such as ``"XIZY"`` (position 0 = qubit 0)."""
        x = z = 0
        for q, letter in enumerate(label):
            try:
                xb, zb = _MASKS[letter]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {letter!r}") from None
            x |= xb << q
            z |= zb << q
        return cls(len(label), x, z)

    @property
    def label(self) -> str:
        return "".join(
            _LETTERS[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)]
            for q in range(self.n_qubits)
        )

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    @property
    def weight(self) -> int:
        """Number of non-identity letters."""
        return (self.x_mask | self.z_mask).bit_count()

    def commutes_with(self, other: "PauliString") -> bool:
        sym = (self.x_mask & other.z_mask).bit_count() + (self.z_mask & other.x_mask).bit_count()
        return sym % 2 == 0

    def __str__(self) -> str:
        return self.label


class PauliSum:
    """Weighted sum of Pauli strings on a fixed qubit register.

    Terms are held as a map from (x_mask, z_mask) to a complex coefficient.
    Instances are immutable once constructed; every operation returns a new
    simplified sum with coefficients below ``COEFF_DROP_THRESHOLD`` removed.
    """

    __slots__ = ("n_qubits", "_terms", "_compiled")

    def __init__(self, n_qubits: int, terms: Mapping[tuple[int, int], complex] | None = None):
        self.n_qubits = int(n_qubits)
        cleaned: dict[tuple[int, int], complex] = {}
        if terms:
            for key, coeff in terms.items():
                c = complex(coeff)
                if abs(c) >= COEFF_DROP_THRESHOLD:
                    cleaned[key] = c
        self._terms = cleaned
        self._compiled = None  # lazily attached by the statevector module

    # -- construction ------------------------------------------------------

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits, {})

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {(0, 0): complex(coeff)})

    @classmethod
    def from_terms(cls, terms: Mapping[str, complex]) -> "PauliSum":
        """Build from a label -> coefficient mapping (labels of equal length)."""
        if not terms:
            raise ValueError("from_terms needs at least one labeled term")
        lengths = {len(label) for label in terms}
        if len(lengths) != 1:
            raise ValueError("all labels must share one qubit count")
        n = lengths.pop()
        acc: dict[tuple[int, int], complex] = {}
        for label, coeff in terms.items():
            ps = PauliString.from_label(label)
            key = (ps.x_mask, ps.z_mask)
            acc[key] = acc.get(key, 0.0) + complex(coeff)
        return cls(n, acc)

    # -- inspection --------------------------------------------------------

    @property
    def n_terms(self) -> int:
        return len(self._terms)

    def items(self) -> Iterator[tuple[PauliString, complex]]:
        """Iterate (string, coefficient) in a deterministic mask order."""
        for (x, z) in sorted(self._terms):
            yield PauliString(self.n_qubits, x, z), self._terms[(x, z)]

    def mask_items(self) -> list[tuple[int, int, complex]]:
        """Deterministically ordered raw (x_mask, z_mask, coefficient) triples."""
        return [(x, z, self._terms[(x, z)]) for (x, z) in sorted(self._terms)]

    def coefficient(self, label: str) -> complex:
        ps = PauliString.from_label(label)
        if ps.n_qubits != self.n_qubits:
            raise ValueError("label length does not match qubit count")
        return self._terms.get((ps.x_mask, ps.z_mask), 0.0 + 0.0j)

    @property
    def identity_coefficient(self) -> complex:
        return self._terms.get((0, 0), 0.0 + 0.0j)

    def abs_coefficient_sum(self) -> float:
        """Sum of |coefficient| over all terms (identity included).

        Evaluated in sorted-mask order with exact summation, so the value is
        independent of term insertion order.
        """
        return math.fsum(abs(self._terms[k]) for k in sorted(self._terms))

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        """Hermitian iff every coefficient is real (letter strings are Hermitian)."""
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_anti_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.real) <= tol for c in self._terms.values())

    # -- algebra -----------------------------------------------------------

    def _require_same_register(self, other: "PauliSum") -> None:
        if self.n_qubits != other.n_qubits:
            raise ValueError("PauliSums act on different qubit counts")

    def __add__(self, other: "PauliSum") -> "PauliSum":
        self._require_same_register(other)
        acc = dict(self._terms)
        for key, coeff in other._terms.items():
            acc[key] = acc.get(key, 0.0) + coeff
        return PauliSum(self.n_qubits, acc)

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-1.0) * other

    def __mul__(self, scalar: complex) -> "PauliSum":
        s = complex(scalar)
        return PauliSum(self.n_qubits, {k: c * s for k, c in self._terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "PauliSum":
        return self * -1.0

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        """Operator product, expanded and simplified."""
        self._require_same_register(other)
        acc: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._terms.items():
            for (x2, z2), c2 in other._terms.items():
                phase, x, z = _mul_masks(x1, z1, x2, z2)
                key = (x, z)
                acc[key] = acc.get(key, 0.0) + phase * c1 * c2
        return PauliSum(self.n_qubits, acc)

    def dagger(self) -> "PauliSum":
        """Hermitian adjoint: conjugate coefficients (strings are Hermitian)."""
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        if self.n_qubits != other.n_qubits:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(
            abs(self._terms.get(k, 0.0) - other._terms.get(k, 0.0)) <= 1e-10 for k in keys
        )

    def __repr__(self) -> str:
        parts = [f"({c:+.6g})*{s.label}" for s, c in self.items()]
        body = " + ".join(parts) if parts else "0"
        return f"PauliSum[{self.n_qubits}]({body})"


# ---------------------------------------------------------------------------
# Jordan-Wigner map
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def ladder_pauli(p: int, creation: bool, n_qubits: int) -> PauliSum:
    """Jordan-Wigner image of a single ladder operator on orbital/qubit p.

    a^dag_p -> (X_p - i Y_p)/2 with a Z string on all qubits q < p;
    a_p is the adjoint (+i on the Y term).
    """
    if not 0 <= p < n_qubits:
        raise ValueError(f"orbital index {p} outside register of {n_qubits}")
    z_string = (1 << p) - 1  # qubits 0 .. p-1
    x_bit = 1 << p
    y_sign = -0.5j if creation else 0.5j
    return PauliSum(
        n_qubits,
        {
            (x_bit, z_string): 0.5 + 0.0j,
            (x_bit, z_string | x_bit): y_sign,
        },
    )


def jordan_wigner(
    ops: Sequence[tuple[int, bool]], coefficient: complex, n_qubits: int
) -> PauliSum:
    """Map a product of ladder operators to a PauliSum.

    ``ops`` lists (orbital index, is_creation) factors in left-to-right
    operator order; the result is ``coefficient * product``.
    """
    result = PauliSum.identity(n_qubits, coefficient)
    for p, creation in ops:
        result = result @ ladder_pauli(p, creation, n_qubits)
    return result


def number_operator(n_qubits: int) -> PauliSum:
    """Total particle-number operator sum_p a^dag_p a_p as a PauliSum."""
    acc = PauliSum.zero(n_qubits)
    for p in range(n_qubits):
        acc = acc + jordan_wigner([(p, True), (p, False)], 1.0, n_qubits)
    return acc


# ---------------------------------------------------------------------------
# Excitations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Excitation:
    """Particle-hole excitation: ordered occupied and virtual spin orbitals.

    The generator is kappa = tau - tau^dag with, for a double,
    tau = a^dag_a a^dag_b a_j a_i for occ=(i, j), virt=(a, b); singles follow
    the same pattern with one index each.  Index tuples are strictly
    increasing, disjoint, and conserve Sz under the even-alpha/odd-beta
    spin-orbital convention.
    """

    occ: tuple[int, ...]
    virt: tuple[int, ...]

    def __post_init__(self) -> None:
        occ, virt = tuple(self.occ), tuple(self.virt)
        object.__setattr__(self, "occ", occ)
        object.__setattr__(self, "virt", virt)
        if len(occ) != len(virt):
            raise ValueError("occupied and virtual index counts differ")
        if not 1 <= len(occ) <= 2:
            raise ValueError("only single and double excitations are supported")
        for indices in (occ, virt):
            if any(b <= a for a, b in zip(indices, indices[1:])):
                raise ValueError("index tuples must be strictly increasing")
            if any(i < 0 for i in indices):
                raise ValueError("negative spin-orbital index")
        if set(occ) & set(virt):
            raise ValueError("occupied and virtual indices overlap")
        if sum(i % 2 for i in occ) != sum(a % 2 for a in virt):
            raise ValueError("excitation does not conserve Sz")

    @property
    def rank(self) -> int:
        return len(self.occ)

    @property
    def touched_qubits(self) -> tuple[int, ...]:
        return tuple(sorted(self.occ + self.virt))

    def ladder_ops(self) -> tuple[tuple[int, bool], ...]:
        """Normal-ordered ladder string of tau, left-to-right."""
        creations = tuple((a, True) for a in self.virt)
        annihilations = tuple((i, False) for i in reversed(self.occ))
        return creations + annihilations

    def __str__(self) -> str:
        occ = ",".join(map(str, self.occ))
        virt = ",".join(map(str, self.virt))
        return f"{occ}->{virt}"


@lru_cache(maxsize=None)
def kappa_to_pauli(exc: Excitation, n_qubits: int) -> PauliSum:
    """Anti-Hermitian generator kappa = tau - tau^dag as a PauliSum.

    All coefficients are purely imaginary and all terms mutually commute,
    which downstream code exploits to apply exp(theta*kappa) exactly.
    """
    tau_ops = exc.ladder_ops()
    tau = jordan_wigner(tau_ops, 1.0, n_qubits)
    tau_dag = jordan_wigner(tuple((p, not c) for p, c in reversed(tau_ops)), 1.0, n_qubits)
    kappa = tau - tau_dag
    if not kappa.is_anti_hermitian():
        raise AssertionError("kappa construction produced non-imaginary coefficients")
    return kappa


def excitation_pool(h: "SpinOrbitalHamiltonian") -> list[Excitation]:
    """All Sz-preserving singles and doubles for the Hamiltonian's reference.

    Deterministic order: rank first, then lexicographic (occ, virt) indices.
    Empty when the reference leaves no virtual orbitals.
    """
    occupied = sorted(h.occupation)
    virtual = [p for p in range(h.n_so) if p not in set(occupied)]
    pool: list[Excitation] = []
    for i in occupied:
        for a in virtual:
            if i % 2 == a % 2:
                pool.append(Excitation((i,), (a,)))
    for ii, i in enumerate(occupied):
        for j in occupied[ii + 1 :]:
            spin_out = i % 2 + j % 2
            for aa, a in enumerate(virtual):
                for b in virtual[aa + 1 :]:
                    if a % 2 + b % 2 == spin_out:
                        pool.append(Excitation((i, j), (a, b)))
    pool.sort(key=lambda e: (e.rank, e.occ, e.virt))
    return pool


def hamiltonian_to_pauli(h: "SpinOrbitalHamiltonian") -> PauliSum:
    """Jordan-Wigner image of the second-quantized Hamiltonian.

    H = core + sum_pq h_pq a^dag_p a_q
             + (1/4) sum_pqrs <pq||rs> a^dag_p a^dag_q a_s a_r,
    accumulated over the antisymmetry-unique p<q, r<s quadruples.  The result
    is Hermitian with real coefficients; the identity coefficient carries the
    core energy.
    """
    n = h.n_so
    acc: dict[tuple[int, int], complex] = {}

    def accumulate(ps: PauliSum) -> None:
        for key, coeff in ps._terms.items():
            acc[key] = acc.get(key, 0.0) + coeff

    accumulate(PauliSum.identity(n, h.core_energy))
    h1 = h.h1_so
    for p in range(n):
        for q in range(n):
            if abs(h1[p, q]) >= COEFF_DROP_THRESHOLD:
                accumulate(jordan_wigner([(p, True), (q, False)], h1[p, q], n))
    g = h.g2_anti
    for p in range(n):
        for q in range(p + 1, n):
            for r in range(n):
                for s in range(r + 1, n):
                    coeff = g[p, q, r, s]
                    if abs(coeff) >= COEFF_DROP_THRESHOLD:
                        # <pq||rs> a^dag_p a^dag_q a_s a_r
                        accumulate(
                            jordan_wigner(
                                [(p, True), (q, True), (s, False), (r, False)], coeff, n
                            )
                        )
    result = PauliSum(n, acc)
    if not result.is_hermitian():
        raise AssertionError("mapped Hamiltonian has non-real coefficients")
    return result


def _iterable_excitations(obj: Iterable) -> list[Excitation]:
    return [e for e in obj if isinstance(e, Excitation)]
