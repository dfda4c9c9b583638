"""Depolarizing noise, gate accounting, folding, and zero-noise extrapolation.

Noise is simulated at the fault-location level: every excitation-exponential
block carries a number of two-qubit and single-qubit fault locations given by
its gate-count equivalents, and each location fires a depolarizing event with
the corresponding probability.  A fired event applies a Pauli drawn uniformly
from the full Pauli group on the touched qubits (identity included), which
realizes the standard depolarizing channel with attenuation factor (1 - p)
per location.  Expectations are estimated by a two-level Monte Carlo: an
ensemble of Pauli trajectories, plus Gaussian shot noise with the exact
per-trajectory single-shot variance.

Mitigation follows the random-folding + Richardson-extrapolation protocol:
odd integer scale factors fold the whole circuit, other scales fold a random
subset of blocks in place, and the zero-noise estimate is the value at scale
zero of the interpolating polynomial through the measured points.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .hamiltonian import OrbitalEnergies, mp2_denominator
from .operators import Excitation, PauliSum
from .pqe import MEASUREMENT_ANGLE
from .adpqe import PartitionPlan
from .operators import kappa_to_pauli
from .statevector import (
    OrderedAnsatz,
    apply_excitation_rotation,
    compiled,
    excited_determinant,
    reference_state,
)

__all__ = [
    "DEFAULT_P1",
    "DEFAULT_P2",
    "NoiseModel",
    "QebConstants",
    "GateCounts",
    "FaultReport",
    "ZneConfig",
    "ProtocolConfig",
    "Preparation",
    "count_gates",
    "fault_report",
    "depolarize_batch",
    "noisy_expectation",
    "fold_and_measure",
    "richardson_extrapolate",
    "mitigated_expectation",
    "MeasurementBudget",
    "measurement_budget",
    "NoisyRunResult",
    "NoisyAggregate",
    "noisy_protocol_run",
]

# Artifact defaults for "current-hardware-like" depolarizing strengths; the
# reduced-noise scenario is the same model with both values scaled by 0.1.
DEFAULT_P1 = 1e-3
DEFAULT_P2 = 1e-2


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing strengths and sampling effort.

    ``shots`` is the total measurement budget per expectation value (0 means
    the infinite-shot limit); ``trajectories`` is the size of the Pauli
    trajectory ensemble the budget is spread over.
    """

    p1: float = DEFAULT_P1
    p2: float = DEFAULT_P2
    shots: int = 5000
    trajectories: int = 48

    def __post_init__(self) -> None:
        if not 0.0 <= self.p1 <= 1.0 or not 0.0 <= self.p2 <= 1.0:
            raise ValueError("depolarizing probabilities must lie in [0, 1]")
        if self.shots < 0:
            raise ValueError("shots must be non-negative (0 = infinite)")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")

    @property
    def noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0


@dataclass(frozen=True)
class QebConstants:
    """Gate-count equivalents of one excitation-exponential block.

    The CNOT numbers follow the CNOT-efficient qubit-excitation circuits;
    the single-qubit numbers are companion bookkeeping values.  All four are
    configuration inputs, not asserted facts about any specific compiler.
    """

    cnot_per_single: int = 2
    cnot_per_double: int = 13
    one_qubit_per_single: int = 4
    one_qubit_per_double: int = 16

    def __post_init__(self) -> None:
        for value in (
            self.cnot_per_single,
            self.cnot_per_double,
            self.one_qubit_per_single,
            self.one_qubit_per_double,
        ):
            if value < 0:
                raise ValueError("gate-count constants must be non-negative")


@dataclass(frozen=True)
class GateCounts:
    n_cnot: int
    n_single_qubit: int


@dataclass(frozen=True)
class FaultReport:
    """Fault-location bookkeeping for one circuit realization."""

    fault_rate: float  # lambda = sum of per-location probabilities
    fault_free_product: float  # prod (1 - p_l)
    fault_free_exponential: float  # e^{-lambda}


@dataclass(frozen=True)
class ZneConfig:
    """Scale factors and polynomial order for zero-noise extrapolation."""

    scale_factors: tuple[float, ...] = (1.0, 2.0, 3.0)
    order: int | None = None  # None: use all points (degree len-1)

    def __post_init__(self) -> None:
        scales = tuple(float(c) for c in self.scale_factors)
        object.__setattr__(self, "scale_factors", scales)
        if len(scales) < 2:
            raise ValueError("extrapolation needs at least two scale factors")
        if any(c < 1.0 for c in scales):
            raise ValueError("scale factors must be >= 1")
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise ValueError("scale factors must be strictly increasing")
        if self.order is not None:
            if self.order < 1:
                raise ValueError("extrapolation order must be >= 1")
            if len(scales) < self.order + 1:
                raise ValueError("need at least order+1 scale factors")

    @property
    def points_used(self) -> int:
        return len(self.scale_factors) if self.order is None else self.order + 1


@dataclass(frozen=True)
class ProtocolConfig:
    """Fixed-length noisy-iteration protocol parameters."""

    terminate_at: int = 40
    average_last: int = 10
    repeats: int = 10

    def __post_init__(self) -> None:
        if self.terminate_at < 1:
            raise ValueError("need at least one iteration")
        if not 1 <= self.average_last <= self.terminate_at:
            raise ValueError("average window must fit in the iteration count")
        if self.repeats < 1:
            raise ValueError("need at least one repeat")


@dataclass(frozen=True)
class Preparation:
    """A state-preparation circuit: an initial determinant plus excitation
    blocks written left-to-right (the rightmost block acts first).

    Determinant preparation itself is treated as fault-free; only the
    excitation blocks carry fault locations.
    """

    n_qubits: int
    initial_occupation: tuple[int, ...]
    excitations: tuple[Excitation, ...]
    angles: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "initial_occupation", tuple(self.initial_occupation))
        object.__setattr__(self, "excitations", tuple(self.excitations))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if len(self.excitations) != len(self.angles):
            raise ValueError("one angle per excitation block required")

    @classmethod
    def from_ansatz(
        cls,
        ansatz: OrderedAnsatz,
        params: Sequence[float],
        occupation: Sequence[int],
    ) -> "Preparation":
        params = np.asarray(params, dtype=float)
        if params.shape != (ansatz.n_parameters,):
            raise ValueError("parameters do not match the ansatz")
        return cls(
            n_qubits=ansatz.n_qubits,
            initial_occupation=tuple(occupation),
            excitations=ansatz.excitations,
            angles=tuple(params),
        )

    def with_probe(self, exc: Excitation, angle: float) -> "Preparation":
        """Append a probe rotation that acts on the initial state before the
        ansatz blocks (it joins the written product at the right end)."""
        return Preparation(
            n_qubits=self.n_qubits,
            initial_occupation=self.initial_occupation,
            excitations=self.excitations + (exc,),
            angles=self.angles + (float(angle),),
        )

    @property
    def n_blocks(self) -> int:
        return len(self.excitations)


def count_gates(
    excitations: Iterable[Excitation], constants: QebConstants = QebConstants()
) -> GateCounts:
    """Gate-count equivalents of a block sequence under the given encoding."""
    n_cnot = 0
    n_one = 0
    for exc in excitations:
        if exc.rank == 1:
            n_cnot += constants.cnot_per_single
            n_one += constants.one_qubit_per_single
        else:
            n_cnot += constants.cnot_per_double
            n_one += constants.one_qubit_per_double
    return GateCounts(n_cnot=n_cnot, n_single_qubit=n_one)


def fault_report(counts: GateCounts, nm: NoiseModel) -> FaultReport:
    """Fault rate and fault-free probabilities of one circuit execution."""
    rate = counts.n_cnot * nm.p2 + counts.n_single_qubit * nm.p1
    product = (1.0 - nm.p2) ** counts.n_cnot * (1.0 - nm.p1) ** counts.n_single_qubit
    return FaultReport(
        fault_rate=rate,
        fault_free_product=product,
        fault_free_exponential=float(np.exp(-rate)),
    )


@lru_cache(maxsize=None)
def _block_fault_locations(
    exc: Excitation, constants: QebConstants
) -> tuple[tuple[tuple[int, ...], ...], tuple[tuple[int, ...], ...]]:
    """(two-qubit, single-qubit) fault locations of one block.

    Locations cycle deterministically over the qubits the excitation
    touches, so the layout is reproducible without consuming randomness.
    """
    touched = exc.touched_qubits
    m = len(touched)
    if exc.rank == 1:
        n_cnot, n_one = constants.cnot_per_single, constants.one_qubit_per_single
    else:
        n_cnot, n_one = constants.cnot_per_double, constants.one_qubit_per_double
    pairs = tuple(
        (touched[i % m], touched[(i + 1) % m]) for i in range(n_cnot)
    )
    singles = tuple((touched[i % m],) for i in range(n_one))
    return pairs, singles


def _apply_pauli_row(
    row: np.ndarray, axis: int, qubit: int, n_qubits: int
) -> np.ndarray:
    """One Pauli letter (1=X, 2=Y, 3=Z) on one statevector."""
    bit = 1 << (n_qubits - 1 - qubit)
    idx = np.arange(row.size, dtype=np.int64)
    if axis == 1:
        return row[idx ^ bit]
    if axis == 3:
        return np.where(idx & bit, -row, row)
    src = idx ^ bit
    return 1j * np.where(src & bit, -1.0, 1.0) * row[src]


def depolarize_batch(
    states: np.ndarray,
    locations: Sequence[tuple[int, ...]],
    probability: float,
    rng: np.random.Generator,
    n_qubits: int,
) -> None:
    """Fire depolarizing fault locations across a trajectory batch, in place.

    For every location two random tableaux are drawn for the whole batch (the
    fire/no-fire uniforms and the Pauli-group picks), so randomness
    consumption is independent of which faults actually fire.  A fired fault
    applies a uniform draw from the full Pauli group on the location's
    qubits; the identity draw is a trivial fault, which is what makes the
    per-location attenuation exactly (1 - p).
    """
    if not locations:
        return
    n_traj = states.shape[0]
    n_loc = len(locations)
    group = 4 ** len(locations[0])
    fires = rng.random((n_loc, n_traj))
    picks = rng.integers(0, group, size=(n_loc, n_traj))
    if probability == 0.0:
        return
    for loc_index, traj in zip(*np.nonzero(fires < probability)):
        code = int(picks[loc_index, traj])
        for j, qubit in enumerate(locations[loc_index]):
            axis = (code >> (2 * j)) & 3
            if axis:
                states[traj] = _apply_pauli_row(
                    states[traj], axis, qubit, n_qubits
                )


class _MeasurementPlan:
    """Observable layout grouped by permutation mask for fast batched
    trajectory measurement via matrix products."""

    __slots__ = ("dim", "groups", "coeff_sq_sum")

    def __init__(self, obs: PauliSum):
        if not obs.is_hermitian():
            raise ValueError("expectation values require a Hermitian observable")
        comp = compiled(obs)
        self.dim = comp.dim
        idx = np.arange(self.dim, dtype=np.int64)
        by_x: dict[int, list[int]] = {}
        for t in range(comp.n_terms):
            by_x.setdefault(int(comp.x_masks[t]), []).append(t)
        groups = []
        total_sq = 0.0
        for x_arr, members in sorted(by_x.items()):
            members = np.array(members)
            parity = (
                np.bitwise_count((idx[None, :] ^ x_arr) & comp.z_masks[members, None])
                & 1
            )
            signs = 1.0 - 2.0 * parity  # (L_group, dim)
            phases = comp.phases[members]
            coeffs = comp.coeffs[members].real
            total_sq += float(np.sum(coeffs**2))
            groups.append((x_arr, signs.T.copy(), phases, coeffs))
        self.groups = groups
        self.coeff_sq_sum = total_sq

    def measure(self, batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-trajectory (mean, single-shot variance) of the observable.

        The variance model treats each Pauli term as measured independently,
        so one shot carries variance sum_l |c_l|^2 (1 - <P_l>^2).
        """
        idx = np.arange(self.dim, dtype=np.int64)
        bra = batch.conj()
        n_traj = batch.shape[0]
        means = np.zeros(n_traj)
        weighted_sq = np.zeros(n_traj)
        for x_arr, signs_t, phases, coeffs in self.groups:
            prod = bra * batch[:, idx ^ x_arr]  # (T, dim)
            values = np.real((prod @ signs_t) * phases)  # (T, L_group)
            means += values @ coeffs
            weighted_sq += values**2 @ coeffs**2
        variances = self.coeff_sq_sum - weighted_sq
        return means, np.maximum(variances, 0.0)


# Keyed by the compiled operator's id; the stored strong reference keeps the
# id valid, and compiled operators are themselves cached on their PauliSum,
# so entries live exactly as long as the observables they describe.
_PLAN_CACHE: dict[int, tuple[object, _MeasurementPlan]] = {}


def _measurement_plan(obs: PauliSum) -> _MeasurementPlan:
    comp = compiled(obs)
    entry = _PLAN_CACHE.get(id(comp))
    if entry is None or entry[0] is not comp:
        entry = (comp, _MeasurementPlan(obs))
        _PLAN_CACHE[id(comp)] = entry
    return entry[1]


@lru_cache(maxsize=None)
def _rotation_arrays(
    exc: Excitation, n_qubits: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(source indices, f, g) realizing exp(theta kappa) in closed form.

    Every Pauli term of an excitation generator kappa shares one X-mask, so
    kappa acts as (kappa psi)[i] = f(i) psi[src(i)] with src = i ^ x, and
    kappa^2 as the diagonal g = f * f[src].  Since kappa^3 = -kappa, the
    exponential is psi + sin(theta) kappa psi + (1 - cos(theta)) kappa^2 psi,
    which costs a single gather per block instead of one per Pauli term.
    """
    comp = compiled(kappa_to_pauli(exc, n_qubits))
    x_masks = set(int(x) for x in comp.x_masks)
    if len(x_masks) != 1:
        raise AssertionError("excitation generator terms must share one X-mask")
    x_arr = x_masks.pop()
    idx = np.arange(comp.dim, dtype=np.int64)
    src = idx ^ x_arr
    f = np.zeros(comp.dim, dtype=complex)
    for t in range(comp.n_terms):
        parity = np.bitwise_count(src & int(comp.z_masks[t])) & 1
        f += comp.coeffs[t] * comp.phases[t] * (1.0 - 2.0 * parity)
    g = f * f[src]
    return src, f, g


def _rotate_batch(
    batch: np.ndarray, exc: Excitation, angle: float, n_qubits: int
) -> np.ndarray:
    src, f, g = _rotation_arrays(exc, n_qubits)
    return (
        batch
        + np.sin(angle) * (f * batch[..., src])
        + (1.0 - np.cos(angle)) * (g * batch)
    )


def _noisy_pass(
    batch: np.ndarray,
    blocks: Sequence[tuple[Excitation, float]],
    nm: NoiseModel,
    constants: QebConstants,
    rng: np.random.Generator,
    n_qubits: int,
) -> np.ndarray:
    """Apply blocks right-to-left, each followed by its fault locations."""
    for exc, angle in reversed(blocks):
        batch = _rotate_batch(batch, exc, angle, n_qubits)
        pairs, singles = _block_fault_locations(exc, constants)
        depolarize_batch(batch, pairs, nm.p2, rng, n_qubits)
        depolarize_batch(batch, singles, nm.p1, rng, n_qubits)
    return batch


def _adjoint_blocks(
    blocks: Sequence[tuple[Excitation, float]]
) -> list[tuple[Excitation, float]]:
    """Blocks of the inverse circuit, in written order."""
    return [(exc, -angle) for exc, angle in reversed(blocks)]


def _prepare_batch(
    prep: Preparation,
    nm: NoiseModel,
    constants: QebConstants,
    rng: np.random.Generator,
    scale: float,
) -> np.ndarray:
    """Trajectory batch after the (possibly folded) noisy preparation."""
    base = reference_state(prep.initial_occupation, prep.n_qubits)
    batch = np.tile(base, (nm.trajectories, 1))
    blocks = list(zip(prep.excitations, prep.angles))
    if not blocks:
        return batch
    nearest = round(scale)
    if nearest % 2 == 1 and abs(scale - nearest) < 1e-12:
        # Odd integer scale: global folding U (U^dag U)^{(c-1)/2}.
        for k in range(int(nearest)):
            pass_blocks = blocks if k % 2 == 0 else _adjoint_blocks(blocks)
            batch = _noisy_pass(batch, pass_blocks, nm, constants, rng, prep.n_qubits)
        return batch
    # General scale: fold blocks in place (B -> B B^dag B applied right to
    # left) so the total fault-location count is round((c-1)/2 * n) folds
    # above the base circuit.  Whole folding rounds apply to every block; the
    # remainder goes to a random block subset.
    n_blocks = len(blocks)
    extra_folds = int(round((scale - 1.0) / 2.0 * n_blocks))
    per_block, remainder = divmod(extra_folds, n_blocks)
    chosen = set(rng.choice(n_blocks, size=remainder, replace=False))
    expanded: list[tuple[Excitation, float]] = []
    for position, (exc, angle) in enumerate(blocks):
        folds = per_block + (1 if position in chosen else 0)
        expanded.extend([(exc, angle), (exc, -angle)] * folds)
        expanded.append((exc, angle))
    return _noisy_pass(batch, expanded, nm, constants, rng, prep.n_qubits)


def _estimate(
    batch: np.ndarray, plan: _MeasurementPlan, nm: NoiseModel, rng: np.random.Generator
) -> float:
    means, variances = plan.measure(batch)
    if nm.shots == 0:
        return float(means.mean())
    # The shot budget is split evenly over trajectories: each trajectory
    # estimate carries variance v_t / (shots / T).
    per_traj_sd = np.sqrt(variances * batch.shape[0] / nm.shots)
    samples = means + rng.standard_normal(batch.shape[0]) * per_traj_sd
    return float(samples.mean())


def _ideal_expectation(prep: Preparation, obs: PauliSum) -> float:
    psi = reference_state(prep.initial_occupation, prep.n_qubits)
    for exc, angle in reversed(list(zip(prep.excitations, prep.angles))):
        psi = apply_excitation_rotation(psi, exc, angle, prep.n_qubits)
    return compiled(obs).expectation(psi)


def _as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def noisy_expectation(
    prep: Preparation,
    obs: PauliSum,
    nm: NoiseModel,
    rng: np.random.Generator | int | None,
    constants: QebConstants = QebConstants(),
) -> float:
    """Monte-Carlo estimate of <psi|obs|psi> under depolarizing noise.

    With both probabilities zero and shots = 0 the exact ideal value is
    returned and no randomness is consumed.
    """
    if nm.noiseless and nm.shots == 0:
        _measurement_plan(obs)  # keep the Hermiticity check on this path too
        return _ideal_expectation(prep, obs)
    return fold_and_measure(prep, obs, nm, 1.0, rng, constants)


def fold_and_measure(
    prep: Preparation,
    obs: PauliSum,
    nm: NoiseModel,
    scale: float,
    rng: np.random.Generator | int | None,
    constants: QebConstants = QebConstants(),
) -> float:
    """Noise-scaled estimate: fold the preparation to ``scale`` and measure."""
    if scale < 1.0:
        raise ValueError("folding scale must be >= 1")
    plan = _measurement_plan(obs)
    if nm.noiseless and nm.shots == 0:
        return _ideal_expectation(prep, obs)
    rng = _as_rng(rng)
    batch = _prepare_batch(prep, nm, constants, rng, float(scale))
    return _estimate(batch, plan, nm, rng)


def richardson_extrapolate(points: Iterable[tuple[float, float]]) -> float:
    """Zero-noise value of the polynomial through (scale, value) points.

    Lagrange evaluation at scale 0; two points (1, v1), (2, v2) give the
    familiar 2 v1 - v2.
    """
    pts = [(float(s), float(v)) for s, v in points]
    if len(pts) < 2:
        raise ValueError("extrapolation needs at least two points")
    scales = [s for s, _ in pts]
    if len(set(scales)) != len(scales):
        raise ValueError("scale factors must be distinct")
    total = 0.0
    for i, (s_i, v_i) in enumerate(pts):
        weight = 1.0
        for j, (s_j, _) in enumerate(pts):
            if j != i:
                weight *= s_j / (s_j - s_i)
        total += weight * v_i
    return total


def mitigated_expectation(
    prep: Preparation,
    obs: PauliSum,
    nm: NoiseModel,
    zne: ZneConfig,
    rng: np.random.Generator | int | None,
    constants: QebConstants = QebConstants(),
) -> float:
    """Fold at each configured scale and extrapolate to zero noise."""
    rng = _as_rng(rng)
    scales = zne.scale_factors[: zne.points_used]
    points = [
        (c, fold_and_measure(prep, obs, nm, c, rng, constants)) for c in scales
    ]
    return richardson_extrapolate(points)


@dataclass(frozen=True)
class MeasurementBudget:
    """Residue-measurement shot bounds for full and principal-only solves."""

    full_bound: float
    principal_bound: float
    ratio: float


def measurement_budget(
    n_parameters: int,
    hamiltonian_weight: float,
    epsilon: float,
    f_pps: float = 1.0,
) -> MeasurementBudget:
    """Upper bound 3 N (sum_l |h_l|)^2 / eps^2 on residue measurements.

    The principal-only bound scales the same formula by the continuous
    fraction, so the reported ratio equals f_pps exactly by construction.
    """
    if n_parameters < 1:
        raise ValueError("need at least one parameter")
    if hamiltonian_weight < 0:
        raise ValueError("Hamiltonian weight must be non-negative")
    if epsilon <= 0:
        raise ValueError("target precision must be positive")
    if not 0.0 < f_pps <= 1.0:
        raise ValueError("principal fraction must lie in (0, 1]")
    full = 3.0 * n_parameters * hamiltonian_weight**2 / epsilon**2
    return MeasurementBudget(
        full_bound=full, principal_bound=f_pps * full, ratio=f_pps
    )


@dataclass(frozen=True)
class NoisyRunResult:
    """One seeded noisy solve: per-iteration mitigated energies and finals."""

    energies: np.ndarray  # mitigated reference energy, one per iteration
    mean_principal_params: np.ndarray
    mapped_auxiliary_params: np.ndarray
    final_energy: float
    post_mapping_change: float  # 0 for variants without a terminal mapping


@dataclass(frozen=True)
class NoisyAggregate:
    """Seeded repeats of the noisy protocol with per-iteration statistics."""

    per_iteration_mean: np.ndarray
    per_iteration_std: np.ndarray
    final_energies: np.ndarray
    final_mean: float
    final_std: float
    runs: tuple[NoisyRunResult, ...]


_VARIANTS = ("pqe", "nfc-adpqe", "feedback-adpqe")


def _measured_residues(
    h_pauli: PauliSum,
    blocks_exc: tuple[Excitation, ...],
    blocks_angles: np.ndarray,
    probes: Sequence[Excitation],
    occupation: tuple[int, ...],
    reference_energy: float,
    n_qubits: int,
    nm: NoiseModel,
    zne: ZneConfig,
    rng: np.random.Generator,
    constants: QebConstants,
) -> np.ndarray:
    """Measurement-form residues for each probe excitation, mitigated.

    Every residue combines an interference expectation, the excited-state
    diagonal, and the shared mitigated reference energy.
    """
    base = Preparation(n_qubits, occupation, blocks_exc, tuple(blocks_angles))
    out = np.empty(len(probes))
    for i, exc in enumerate(probes):
        omega_prep = base.with_probe(exc, MEASUREMENT_ANGLE)
        interference = mitigated_expectation(
            omega_prep, h_pauli, nm, zne, rng, constants
        )
        _, excited_occ = excited_determinant(occupation, exc)
        excited_prep = Preparation(
            n_qubits, excited_occ, blocks_exc, tuple(blocks_angles)
        )
        excited = mitigated_expectation(
            excited_prep, h_pauli, nm, zne, rng, constants
        )
        out[i] = interference - 0.5 * excited - 0.5 * reference_energy
    return out


def _noisy_single_run(
    h_pauli: PauliSum,
    plan: PartitionPlan,
    variant: str,
    nm: NoiseModel,
    zne: ZneConfig,
    protocol: ProtocolConfig,
    eps: OrbitalEnergies,
    occupation: tuple[int, ...],
    init: np.ndarray,
    rng: np.random.Generator,
    constants: QebConstants,
) -> NoisyRunResult:
    n_qubits = plan.n_qubits
    principal_exc = plan.principal_excitations
    auxiliary_exc = plan.auxiliary_excitations
    denom_p = np.array([mp2_denominator(e, eps) for e in principal_exc])
    denom_a = np.array([mp2_denominator(e, eps) for e in auxiliary_exc])
    theta = plan.principal_values(init)
    feedback = variant == "feedback-adpqe"
    theta_a = np.zeros(plan.n_auxiliary)
    energies = np.empty(protocol.terminate_at)
    history = []

    def energy_of(excs, angles):
        prep = Preparation(n_qubits, occupation, excs, tuple(angles))
        return mitigated_expectation(prep, h_pauli, nm, zne, rng, constants)

    def residues_of(excs, angles, probes, ref_energy):
        return _measured_residues(
            h_pauli, excs, np.asarray(angles), probes, occupation,
            ref_energy, n_qubits, nm, zne, rng, constants,
        )

    def map_auxiliaries(angles):
        """Mitigated shallow-circuit mapping of every auxiliary parameter."""
        e_shallow = energy_of(principal_exc, angles)
        mapped = residues_of(principal_exc, angles, auxiliary_exc, e_shallow) / denom_a
        return e_shallow, mapped

    for k in range(protocol.terminate_at):
        if feedback and plan.n_auxiliary:
            _, theta_a = map_auxiliaries(theta)
        if feedback:
            blocks_exc = principal_exc + auxiliary_exc
            blocks_angles = np.concatenate([theta, theta_a])
        else:
            blocks_exc = principal_exc
            blocks_angles = theta
        reference_energy = energy_of(blocks_exc, blocks_angles)
        residues = residues_of(
            blocks_exc, blocks_angles, principal_exc, reference_energy
        )
        energies[k] = reference_energy
        theta = theta + residues / denom_p
        history.append(theta)

    window = np.stack(history[-protocol.average_last :])
    mean_theta = window.mean(axis=0)
    post_change = 0.0
    if variant == "nfc-adpqe" and plan.n_auxiliary:
        e_shallow, theta_a = map_auxiliaries(mean_theta)
        post_change = float(np.sum(theta_a**2 * denom_a))
        final_energy = e_shallow + post_change
    elif feedback:
        if plan.n_auxiliary:
            _, theta_a = map_auxiliaries(mean_theta)
        final_energy = energy_of(
            principal_exc + auxiliary_exc,
            np.concatenate([mean_theta, theta_a]),
        )
    else:
        theta_a = np.zeros(plan.n_auxiliary)
        final_energy = energy_of(principal_exc, mean_theta)
    return NoisyRunResult(
        energies=energies,
        mean_principal_params=mean_theta,
        mapped_auxiliary_params=theta_a,
        final_energy=float(final_energy),
        post_mapping_change=post_change,
    )


def noisy_protocol_run(
    h_pauli: PauliSum,
    plan: PartitionPlan,
    variant: str,
    nm: NoiseModel,
    zne: ZneConfig,
    protocol: ProtocolConfig,
    eps: OrbitalEnergies,
    occupation: tuple[int, ...],
    init: np.ndarray,
    seed: int,
    constants: QebConstants = QebConstants(),
) -> NoisyAggregate:
    """Seeded repeats of the fixed-length mitigated iteration protocol.

    Each repeat iterates the chosen solver for exactly ``terminate_at``
    steps with every expectation folded and Richardson-extrapolated, then
    averages the principal parameters over the last ``average_last``
    iterations.  The decoupled variant finishes with a mitigated auxiliary
    mapping and the closed-form correction; its post-mapping energy change
    is the (never positive) correction term.  Aggregation reports the
    population mean and spread per iteration and for the final energies.
    """
    if variant not in _VARIANTS:
        raise ValueError(f"unknown solver variant {variant!r}")
    init = np.asarray(init, dtype=float)
    seeds = np.random.SeedSequence(seed).spawn(protocol.repeats)
    runs = []
    for child in seeds:
        rng = np.random.default_rng(child)
        runs.append(
            _noisy_single_run(
                h_pauli, plan, variant, nm, zne, protocol,
                eps, occupation, init, rng, constants,
            )
        )
    table = np.stack([run.energies for run in runs])
    finals = np.array([run.final_energy for run in runs])
    return NoisyAggregate(
        per_iteration_mean=table.mean(axis=0),
        per_iteration_std=table.std(axis=0),
        final_energies=finals,
        final_mean=float(finals.mean()),
        final_std=float(finals.std()),
        runs=tuple(runs),
    )
