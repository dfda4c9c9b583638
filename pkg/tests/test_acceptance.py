"""End-to-end acceptance checks for the full solver stack.

Each test class exercises one guaranteed behavior of the package at its
stated tolerance, using only the bundled fixtures: solver reductions and
accuracy, measurement accounting, operator identities, correction order,
fixed-point stability, error-mitigation exactness, the seeded noisy
protocol, and the independent diagonalization oracles.
"""

import math
import time

import numpy as np
import pytest

from conftest import load_fixture_system
from pqelab import (
    PqeConfig,
    build_hubbard_chain,
    initialize_parameters,
    nfc_solve,
    partition_and_order,
    pqe_solve,
)
from pqelab.adpqe import (
    correction_order_discrepancies,
    stability_spectrum,
)
from pqelab.hamiltonian import (
    SpinOrbitalHamiltonian,
    fock_matrix,
    mp2_denominator,
)
from pqelab.noise import (
    NoiseModel,
    Preparation,
    ProtocolConfig,
    ZneConfig,
    fold_and_measure,
    measurement_budget,
    noisy_expectation,
    noisy_protocol_run,
    richardson_extrapolate,
)
from pqelab.operators import excitation_pool, hamiltonian_to_pauli, kappa_to_pauli
from pqelab.oracle import exact_ground_energy, pauli_to_dense
from pqelab.pqe import residue_measurement_vector, residue_projection
from pqelab.statevector import (
    OrderedAnsatz,
    excited_state,
    expectation,
    reference_state,
)

SEED = 20240822


@pytest.fixture(scope="module")
def h4():
    return load_fixture_system("h4_r0750")


@pytest.fixture(scope="module")
def h4_stretched():
    return load_fixture_system("h4_r1500")


@pytest.fixture(scope="module")
def dimer():
    h, eps = build_hubbard_chain(sites=2, t=1.0, u=4.0, nelec=2)
    return h, eps, hamiltonian_to_pauli(h), excitation_pool(h)


def solve_both_orderings(system, f_pps):
    """Full-pool quasi-Newton solve and the decoupled solve at one fraction,
    both starting from the same perturbative parameters."""
    init = initialize_parameters(system.h, system.eps, system.pool, system.h_pauli)
    plan = partition_and_order(system.pool, init, f_pps, system.h.n_so)
    full = pqe_solve(
        system.h_pauli,
        OrderedAnsatz(system.h.n_so, tuple(system.pool)),
        init,
        system.eps,
        system.h.occupation,
    )
    decoupled = nfc_solve(
        system.h_pauli, plan, init, system.eps, system.h.occupation
    )
    return init, plan, full, decoupled


class TestFullFractionReduction:
    """The decoupled solver with the whole pool principal is the plain
    solver: same energies within 1e-9 and identical trace energy columns."""

    def _identical_traces(self, system_h, eps, h_pauli, pool):
        init = initialize_parameters(system_h, eps, pool, h_pauli)
        plan = partition_and_order(pool, init, 1.0, system_h.n_so)
        ordered_init = np.array(
            [init[s] for s in plan.principal_slots], dtype=float
        )
        plain = pqe_solve(
            h_pauli, plan.principal_ansatz(), ordered_init, eps, system_h.occupation
        )
        reduced = nfc_solve(h_pauli, plan, init, eps, system_h.occupation)
        assert reduced.energy == pytest.approx(plain.energy, abs=1e-9)
        plain_column = [r.energy for r in plain.trace.records]
        reduced_column = [r.energy for r in reduced.trace.records]
        assert reduced_column == plain_column

    def test_hubbard_dimer_and_h4_within_ten_seconds(self, dimer, h4):
        start = time.perf_counter()
        h, eps, h_pauli, pool = dimer
        self._identical_traces(h, eps, h_pauli, pool)
        self._identical_traces(h4.h, h4.eps, h4.h_pauli, h4.pool)
        assert time.perf_counter() - start < 10.0


class TestShallowCircuitAccuracy:
    """A 40% principal block on the compressed H4 chain stays within
    5e-4 hartree of the full solve (expected band 1e-5 to 1e-4)."""

    def test_decoupled_energy_close_to_full_within_two_minutes(self, h4):
        start = time.perf_counter()
        _, _, full, decoupled = solve_both_orderings(h4, f_pps=0.4)
        gap = abs(decoupled.energy - full.energy)
        print(f"as-run |E_decoupled - E_full| = {gap:.6e} hartree")
        assert gap <= 5e-4, f"as-run gap {gap:.6e} exceeds 5e-4"
        assert 1e-5 <= gap <= 1e-4, (
            f"as-run gap {gap:.6e} outside the expected band"
        )
        assert time.perf_counter() - start < 120.0


class TestMeasurementAccounting:
    """Per-iteration residue-evaluation counters and the measurement-bound
    ratio both equal the principal fraction exactly."""

    def test_trace_counter_ratio_is_exact(self, h4):
        _, plan, full, decoupled = solve_both_orderings(h4, f_pps=0.4)
        full_records = [r for r in full.trace.records if r.kind == "iteration"]
        shallow_records = [
            r for r in decoupled.trace.records if r.kind == "iteration"
        ]
        for k, record in enumerate(full_records):
            assert record.cumulative_residue_evals == (k + 1) * plan.n_parameters
        for k, record in enumerate(shallow_records):
            assert record.cumulative_residue_evals == (k + 1) * plan.n_principal
        # evaluations-per-iteration ratio equals N_P / N_par with no rounding
        assert (
            shallow_records[0].cumulative_residue_evals * plan.n_parameters
            == full_records[0].cumulative_residue_evals * plan.n_principal
        )

    def test_measurement_bound_ratio_equals_fraction_exactly(self, h4):
        weight = float(sum(abs(c) for _, c in h4.h_pauli.items()))
        for fraction in (0.4, 0.3, 1.0 / 3.0, 1.0):
            budget = measurement_budget(
                len(h4.pool), weight, epsilon=1e-5, f_pps=fraction
            )
            assert budget.ratio == fraction
            assert budget.principal_bound == pytest.approx(
                fraction * budget.full_bound, rel=1e-15
            )


class TestResidueRouteAgreement:
    """Interference-measurement residues match direct projections to 1e-10
    at random parameter points."""

    def test_twenty_random_points(self, h4):
        ansatz = OrderedAnsatz(h4.h.n_so, tuple(h4.pool))
        rng = np.random.default_rng(SEED)
        for _ in range(20):
            params = rng.uniform(-0.2, 0.2, ansatz.n_parameters)
            measured = residue_measurement_vector(
                h4.h_pauli, ansatz, params, h4.h.occupation
            )
            projected = residue_projection(
                h4.h_pauli, ansatz, params, h4.h.occupation
            )
            np.testing.assert_allclose(measured, projected, atol=1e-10)


class TestMeanFieldCommutator:
    """For a diagonal mean-field operator F, the matrix element
    <det_mu| [F, generator_nu] |ref> is -D_mu on the diagonal and zero off
    it, and every linearized decay rate D_mu is negative."""

    def test_commutator_matrix_and_rates(self, h4):
        h, eps, pool = h4.h, h4.eps, h4.pool
        n = h.n_so
        fock_only = SpinOrbitalHamiltonian(
            n_so=n,
            core_energy=0.0,
            h1_so=fock_matrix(h),
            g2_anti=np.zeros_like(h.g2_anti),
            occupation=h.occupation,
        )
        f_dense = pauli_to_dense(hamiltonian_to_pauli(fock_only))
        phi0 = reference_state(h.occupation, n)
        bras = [excited_state(h.occupation, exc, n) for exc in pool]
        denominators = np.array([mp2_denominator(exc, eps) for exc in pool])
        for nu, exc in enumerate(pool):
            kappa = pauli_to_dense(kappa_to_pauli(exc, n))
            comm_on_ref = f_dense @ (kappa @ phi0) - kappa @ (f_dense @ phi0)
            column = np.array([np.vdot(bra, comm_on_ref) for bra in bras])
            expected = np.zeros(len(pool), dtype=complex)
            expected[nu] = -denominators[nu]
            np.testing.assert_allclose(column, expected, atol=1e-12)
        assert np.all(denominators < 0.0)


class TestCorrectionOrder:
    """Scaling mapped auxiliary amplitudes by s leaves a discrepancy between
    the composite energy and its closed-form closure that shrinks at least
    quadratically."""

    def test_log_log_slope_at_least_1p9(self, h4):
        _, plan, _, decoupled = solve_both_orderings(h4, f_pps=0.4)
        scales = (0.4, 0.2, 0.1, 0.05)
        discrepancies = correction_order_discrepancies(
            h4.h_pauli,
            plan,
            decoupled.principal_params,
            decoupled.auxiliary_params,
            h4.eps,
            h4.h.occupation,
            scales=scales,
        )
        slope = np.polyfit(np.log(scales), np.log(discrepancies), 1)[0]
        assert slope >= 1.9, f"observed slope {slope:.4f}"


class TestFixedPointStability:
    """The quasi-Newton update map linearized at the converged H4 solution
    is a contraction."""

    def test_spectral_radius_below_one(self, h4):
        init = initialize_parameters(h4.h, h4.eps, h4.pool, h4.h_pauli)
        ansatz = OrderedAnsatz(h4.h.n_so, tuple(h4.pool))
        solved = pqe_solve(
            h4.h_pauli, ansatz, init, h4.eps, h4.h.occupation,
            PqeConfig(residue_tolerance=1e-8),
        )
        assert solved.trace.status == "converged"
        spectrum = stability_spectrum(
            h4.h_pauli, ansatz, solved.params, h4.eps, h4.h.occupation
        )
        assert spectrum.spectral_radius < 1.0


class TestMitigationExactness:
    """Richardson extrapolation is exact for observables quadratic in the
    noise scale, and folding without noise is the identity."""

    def test_richardson_recovers_quadratic_intercept(self):
        intercept, linear, quadratic = -1.7, 0.23, 0.061
        points = [
            (scale, intercept + linear * scale + quadratic * scale**2)
            for scale in (1.0, 2.0, 3.0)
        ]
        recovered = richardson_extrapolate(points)
        assert recovered == pytest.approx(intercept, abs=1e-10)

    def test_folding_at_zero_noise_is_identity(self, h4):
        init = initialize_parameters(h4.h, h4.eps, h4.pool, h4.h_pauli)
        prep = Preparation.from_ansatz(
            OrderedAnsatz(h4.h.n_so, tuple(h4.pool)), init, h4.h.occupation
        )
        clean = NoiseModel(p1=0.0, p2=0.0, shots=0)
        ideal = noisy_expectation(prep, h4.h_pauli, clean, rng=SEED)
        for scale in (1.0, 1.5, 2.0, 3.0):
            folded = fold_and_measure(
                prep, h4.h_pauli, clean, scale, rng=SEED
            )
            assert folded == pytest.approx(ideal, abs=1e-10)


class TestNoisyShallowAdvantage:
    """Under the default fault model with mitigation, the shallow decoupled
    run beats the full-pool run on stretched H4: its mean energy after the
    terminal mapping sits strictly below the full-pool mean at termination,
    and every recorded post-mapping energy change is non-positive."""

    def test_seeded_protocol_ordering_within_thirty_minutes(self, h4_stretched):
        start = time.perf_counter()
        s = h4_stretched
        init = initialize_parameters(s.h, s.eps, s.pool, s.h_pauli)
        noise = NoiseModel(p1=1e-3, p2=1e-2, shots=5000, trajectories=48)
        zne = ZneConfig(scale_factors=(1.0, 2.0, 3.0))
        protocol = ProtocolConfig(terminate_at=40, average_last=10, repeats=10)
        aggregates = {}
        for variant, fraction in (("pqe", 1.0), ("nfc-adpqe", 0.3)):
            plan = partition_and_order(s.pool, init, fraction, s.h.n_so)
            aggregates[variant] = noisy_protocol_run(
                s.h_pauli, plan, variant, noise, zne, protocol,
                s.eps, s.h.occupation, init, seed=SEED,
            )
        shallow = aggregates["nfc-adpqe"]
        full = aggregates["pqe"]
        print(
            f"shallow mean {shallow.final_mean:.6f} +- {shallow.final_std:.6f}, "
            f"full-pool mean {full.final_mean:.6f} +- {full.final_std:.6f}"
        )
        assert shallow.final_mean < full.final_mean
        assert all(run.post_mapping_change <= 0.0 for run in shallow.runs)
        elapsed = time.perf_counter() - start
        print(f"noisy protocol wall clock: {elapsed:.0f} s")
        assert elapsed < 1800.0


class TestIndependentOracles:
    """The solver reproduces exact diagonalization on the Hubbard dimer, and
    statevector expectations match dense linear algebra on small registers."""

    def test_dimer_solver_reaches_exact_ground_energy(self, dimer):
        h, eps, h_pauli, pool = dimer
        init = initialize_parameters(h, eps, pool, h_pauli)
        result = pqe_solve(
            h_pauli,
            OrderedAnsatz(h.n_so, tuple(pool)),
            init,
            eps,
            h.occupation,
            PqeConfig(residue_tolerance=1e-8),
        )
        exact = exact_ground_energy(h_pauli, nelec=2)
        assert result.energy == pytest.approx(exact, abs=1e-6)
        assert exact == pytest.approx(2.0 - 2.0 * math.sqrt(2.0), abs=1e-12)

    @pytest.mark.parametrize("system_name", ["h2_fixture", "hubbard_trimer"])
    def test_statevector_matches_dense_oracles(self, system_name):
        if system_name == "h2_fixture":
            s = load_fixture_system("h2_r0750")
            h, h_pauli, pool = s.h, s.h_pauli, s.pool
        else:
            # The interacting chain's hopping eigenbasis is not mean-field
            # canonical; that only matters for denominators, not for the
            # expectation cross-check here.
            with pytest.warns(UserWarning, match="not canonical"):
                h, _ = build_hubbard_chain(sites=3, t=1.0, u=2.0, nelec=2)
            h_pauli = hamiltonian_to_pauli(h)
            pool = excitation_pool(h)
        assert h.n_so <= 6
        dense = pauli_to_dense(h_pauli)
        ansatz = OrderedAnsatz(h.n_so, tuple(pool))
        phi0 = reference_state(h.occupation, h.n_so)
        rng = np.random.default_rng(SEED)
        for _ in range(5):
            params = rng.uniform(-0.5, 0.5, ansatz.n_parameters)
            psi = ansatz.apply(phi0, params)
            fast = expectation(h_pauli, psi)
            reference = float(np.real(np.vdot(psi, dense @ psi)))
            assert fast == pytest.approx(reference, abs=1e-10)
