"""Decoupled-solver tests: partitioning, mapping, correction, stability."""

from __future__ import annotations

import numpy as np
import pytest

import pqelab.adpqe as adpqe_module
from pqelab.adpqe import (
    PartitionPlan,
    bipartite_energy,
    corrected_energy,
    correction_order_discrepancies,
    feedback_adpqe_solve,
    map_auxiliary,
    nfc_residue,
    nfc_solve,
    partition_and_order,
    stability_spectrum,
)
from pqelab.hamiltonian import mp2_denominator
from pqelab.operators import excitation_pool, hamiltonian_to_pauli, jordan_wigner
from pqelab.oracle import dense_exponential, pauli_to_dense
from pqelab.operators import PauliSum, kappa_to_pauli
from pqelab.pqe import initialize_parameters, pqe_solve, residue_projection
from pqelab.statevector import (
    OrderedAnsatz,
    determinant_index,
    excited_determinant,
    reference_state,
)

SEED = 20240823


@pytest.fixture(scope="module")
def h4_setup(h4_system):
    s = h4_system
    init = initialize_parameters(s.h, s.eps, s.pool, s.h_pauli)
    ansatz = OrderedAnsatz(s.h.n_so, tuple(s.pool))
    full = pqe_solve(s.h_pauli, ansatz, init, s.eps, s.h.occupation)
    return s, init, ansatz, full


def dimer_setup(hubbard_dimer):
    h, eps = hubbard_dimer
    h_pauli = hamiltonian_to_pauli(h)
    pool = excitation_pool(h)
    init = initialize_parameters(h, eps, pool, h_pauli)
    return h, eps, h_pauli, pool, init


class TestPartition:
    def test_full_fraction_takes_whole_pool(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 1.0, s.h.n_so)
        assert plan.auxiliary_slots == ()
        assert sorted(plan.principal_slots) == list(range(len(s.pool)))

    def test_principal_count_rounds_to_nearest_with_floor_one(self, h4_setup):
        s, init, _, _ = h4_setup
        # 0.4 * 26 = 10.4 -> 10; 0.25 * 26 = 6.5 -> 7 (half away from zero);
        # a tiny fraction still keeps one principal parameter.
        assert partition_and_order(s.pool, init, 0.4, s.h.n_so).n_principal == 10
        assert partition_and_order(s.pool, init, 0.25, s.h.n_so).n_principal == 7
        assert partition_and_order(s.pool, init, 1e-6, s.h.n_so).n_principal == 1

    def test_selection_is_by_magnitude(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        magnitudes = np.abs(init)
        cutoff = sorted(magnitudes, reverse=True)[plan.n_principal - 1]
        assert min(magnitudes[list(plan.principal_slots)]) >= cutoff
        if plan.n_auxiliary:
            assert max(magnitudes[list(plan.auxiliary_slots)]) <= cutoff

    def test_block_layout_doubles_then_singles_descending(self, h4_setup):
        s, init, _, _ = h4_setup
        magnitudes = np.abs(init)
        for f in (0.3, 0.4, 0.5, 1.0):
            plan = partition_and_order(s.pool, init, f, s.h.n_so)
            for slots in (plan.principal_slots, plan.auxiliary_slots):
                ranks = [s.pool[i].rank for i in slots]
                assert ranks == sorted(ranks, reverse=True)
                for rank in (2, 1):
                    block = [magnitudes[i] for i in slots if s.pool[i].rank == rank]
                    assert all(a >= b - 1e-15 for a, b in zip(block, block[1:]))

    def test_ties_fall_back_to_pool_order(self, h4_setup):
        s, _, _, _ = h4_setup
        uniform = np.ones(len(s.pool))
        plan = partition_and_order(s.pool, uniform, 0.5, s.h.n_so)
        doubles = [i for i, exc in enumerate(s.pool) if exc.rank == 2]
        singles = [i for i, exc in enumerate(s.pool) if exc.rank == 1]
        # All magnitudes equal: selection takes the lowest pool slots, and
        # each block preserves pool order.
        assert set(plan.principal_slots) == set(range(plan.n_principal))
        principal_doubles = [i for i in plan.principal_slots if s.pool[i].rank == 2]
        assert principal_doubles == sorted(principal_doubles)
        assert list(plan.principal_slots) == sorted(
            plan.principal_slots, key=lambda i: (0 if s.pool[i].rank == 2 else 1, i)
        )
        assert doubles and singles  # sanity: both blocks exist in the pool

    def test_validation_errors(self, h4_setup):
        s, init, _, _ = h4_setup
        with pytest.raises(ValueError, match="empty"):
            partition_and_order((), np.zeros(0), 0.5, s.h.n_so)
        for bad in (0.0, -0.1, 1.2):
            with pytest.raises(ValueError, match="fraction"):
                partition_and_order(s.pool, init, bad, s.h.n_so)
        with pytest.raises(ValueError, match="parameters"):
            partition_and_order(s.pool, init[:-1], 0.5, s.h.n_so)

    def test_h4_principal_block_is_all_doubles(self, h4_setup):
        # Perturbative doubles dominate the magnitude ranking at equilibrium.
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        assert all(s.pool[i].rank == 2 for i in plan.principal_slots)


class TestNfcResidue:
    def test_full_fraction_equals_projection(self, hubbard_dimer):
        h, eps, h_pauli, pool, init = dimer_setup(hubbard_dimer)
        plan = partition_and_order(pool, init, 1.0, h.n_so)
        theta = np.array([0.1, -0.2, 0.3])
        direct = residue_projection(h_pauli, plan.principal_ansatz(), theta, h.occupation)
        np.testing.assert_array_equal(
            nfc_residue(h_pauli, plan, theta, h.occupation), direct
        )

    def test_matches_dense_oracle(self, hubbard_dimer):
        # Brute-force route: materialize U_P as a dense product of rotation
        # exponentials and read the matrix elements directly.
        h, eps, h_pauli, pool, init = dimer_setup(hubbard_dimer)
        plan = partition_and_order(pool, init, 0.5, h.n_so)
        rng = np.random.default_rng(SEED)
        theta = rng.uniform(-0.5, 0.5, size=plan.n_principal)
        h_dense = pauli_to_dense(h_pauli)
        u_dense = np.eye(1 << h.n_so, dtype=complex)
        # Written order left-to-right; rightmost factor hits the state first.
        for exc, angle in zip(plan.principal_excitations, theta):
            u_dense = u_dense @ dense_exponential(angle * kappa_to_pauli(exc, h.n_so))
        dressed = u_dense.conj().T @ h_dense @ u_dense
        ref_idx = determinant_index(h.occupation, h.n_so)
        residues = nfc_residue(h_pauli, plan, theta, h.occupation)
        for row, exc in enumerate(plan.principal_excitations):
            sign, new_occ = excited_determinant(h.occupation, exc)
            expected = sign * dressed[determinant_index(new_occ, h.n_so), ref_idx]
            assert residues[row] == pytest.approx(expected.real, abs=1e-10)
            assert abs(expected.imag) < 1e-10


class TestMapAuxiliary:
    def test_identity_principal_gives_brillouin_and_mp2(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        mapped = map_auxiliary(
            s.h_pauli, plan, np.zeros(plan.n_principal), s.eps, s.h.occupation
        )
        for value, exc in zip(mapped, plan.auxiliary_excitations):
            if exc.rank == 1:
                assert abs(value) < 1e-10
            else:
                (i, j), (a, b) = exc.occ, exc.virt
                mp2 = s.h.g2_anti[i, j, a, b] / mp2_denominator(exc, s.eps)
                assert value == pytest.approx(mp2, abs=1e-12)

    def test_fock_only_hamiltonian_maps_to_zero(self, hubbard_dimer):
        h, eps, _, pool, _ = dimer_setup(hubbard_dimer)
        bare = type(h)(
            n_so=h.n_so,
            core_energy=h.core_energy,
            h1_so=h.h1_so,
            g2_anti=np.zeros_like(h.g2_anti),
            occupation=h.occupation,
        )
        bare_pauli = hamiltonian_to_pauli(bare)
        plan = partition_and_order(pool, np.zeros(len(pool)), 0.5, h.n_so)
        mapped = map_auxiliary(
            bare_pauli, plan, np.zeros(plan.n_principal), eps, h.occupation
        )
        np.testing.assert_allclose(mapped, 0.0, atol=1e-12)

    def test_empty_auxiliary_maps_to_empty(self, hubbard_dimer):
        h, eps, h_pauli, pool, init = dimer_setup(hubbard_dimer)
        plan = partition_and_order(pool, init, 1.0, h.n_so)
        mapped = map_auxiliary(
            h_pauli, plan, plan.principal_values(init), eps, h.occupation
        )
        assert mapped.shape == (0,)

    def test_mapped_signs_match_full_solve(self, h4_setup):
        s, init, _, full = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        result = nfc_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        for value, slot in zip(result.auxiliary_params, plan.auxiliary_slots):
            reference = full.params[slot]
            if abs(reference) > 1e-4:
                assert np.sign(value) == np.sign(reference)


class TestCorrectedEnergy:
    def test_empty_auxiliary_returns_principal_energy(self, hubbard_dimer):
        h, eps, h_pauli, pool, init = dimer_setup(hubbard_dimer)
        plan = partition_and_order(pool, init, 1.0, h.n_so)
        theta_P = plan.principal_values(init)
        from pqelab.pqe import pqe_energy

        assert corrected_energy(
            h_pauli, plan, theta_P, np.zeros(0), eps, h.occupation
        ) == pytest.approx(
            pqe_energy(h_pauli, plan.principal_ansatz(), theta_P, h.occupation),
            abs=1e-14,
        )

    def test_zero_auxiliaries_give_zero_correction(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        theta_P = plan.principal_values(init)
        from pqelab.pqe import pqe_energy

        assert corrected_energy(
            s.h_pauli, plan, theta_P, np.zeros(plan.n_auxiliary), s.eps, s.h.occupation
        ) == pytest.approx(
            pqe_energy(s.h_pauli, plan.principal_ansatz(), theta_P, s.h.occupation),
            abs=1e-14,
        )

    def test_correction_is_nonpositive_for_negative_denominators(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        assert all(
            mp2_denominator(exc, s.eps) < 0 for exc in plan.auxiliary_excitations
        )
        result = nfc_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        assert result.correction <= 0.0

    def test_discrepancy_shrinks_at_second_order(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        result = nfc_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        scales = (0.4, 0.2, 0.1, 0.05)
        diffs = correction_order_discrepancies(
            s.h_pauli,
            plan,
            result.principal_params,
            result.auxiliary_params,
            s.eps,
            s.h.occupation,
            scales,
        )
        slope = np.polyfit(np.log(scales), np.log(diffs), 1)[0]
        assert slope >= 1.9

    def test_auxiliary_shape_mismatch_raises(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        with pytest.raises(ValueError, match="auxiliary"):
            corrected_energy(
                s.h_pauli,
                plan,
                plan.principal_values(init),
                np.zeros(3),
                s.eps,
                s.h.occupation,
            )


class TestNfcSolve:
    def test_reduction_identity_at_full_fraction(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 1.0, s.h.n_so)
        baseline = pqe_solve(
            s.h_pauli,
            plan.principal_ansatz(),
            plan.principal_values(init),
            s.eps,
            s.h.occupation,
        )
        result = nfc_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        assert result.correction == 0.0
        assert result.energy == baseline.energy
        assert len(result.trace.records) == len(baseline.trace.records)
        for mine, theirs in zip(result.trace.records, baseline.trace.records):
            assert mine.energy == theirs.energy
            assert mine.kind == "iteration"

    def test_h4_lands_near_full_solver(self, h4_setup):
        s, init, _, full = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        result = nfc_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        assert result.converged
        assert abs(result.energy - full.energy) <= 5e-4

    def test_post_mapping_record_closes_the_trace(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        result = nfc_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        final = result.trace.final
        previous = result.trace.records[-2]
        assert final.kind == "post_optimization_mapping"
        assert previous.kind == "iteration"
        assert final.energy == pytest.approx(result.e_corrected, abs=0)
        assert final.energy - previous.energy <= 0.0  # the dip
        assert final.cumulative_residue_evals == (
            previous.cumulative_residue_evals + plan.n_auxiliary
        )
        assert final.iteration == previous.iteration + 1

    def test_evaluation_ratio_is_exact(self, h4_setup):
        s, init, _, full = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        result = nfc_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        iter_records = [r for r in result.trace.records if r.kind == "iteration"]
        for k, record in enumerate(iter_records):
            assert record.cumulative_residue_evals == plan.n_principal * (k + 1)
        # Per-iteration component counts form the exact advertised ratio.
        full_per_iter = full.trace.records[0].cumulative_residue_evals
        nfc_per_iter = iter_records[0].cumulative_residue_evals
        assert nfc_per_iter * len(s.pool) == full_per_iter * plan.n_principal

    def test_auxiliary_init_components_are_ignored(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        scrambled = init.copy()
        scrambled[list(plan.auxiliary_slots)] = 99.0
        clean = nfc_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        dirty = nfc_solve(s.h_pauli, plan, scrambled, s.eps, s.h.occupation)
        assert dirty.energy == clean.energy
        np.testing.assert_array_equal(dirty.principal_params, clean.principal_params)


class TestFeedbackSolve:
    def test_reduces_to_pqe_at_full_fraction(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 1.0, s.h.n_so)
        baseline = pqe_solve(
            s.h_pauli,
            plan.principal_ansatz(),
            plan.principal_values(init),
            s.eps,
            s.h.occupation,
        )
        result = feedback_adpqe_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        assert result.energy == baseline.energy
        assert [r.energy for r in result.trace.records] == [
            r.energy for r in baseline.trace.records
        ]

    def test_maps_auxiliaries_once_per_iteration(self, h4_setup, monkeypatch):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        calls = {"n": 0}
        original = adpqe_module.map_auxiliary

        def counting(*args, **kwargs):
            calls["n"] += 1
            return original(*args, **kwargs)

        monkeypatch.setattr(adpqe_module, "map_auxiliary", counting)
        result = adpqe_module.feedback_adpqe_solve(
            s.h_pauli, plan, init, s.eps, s.h.occupation
        )
        assert calls["n"] == len(result.trace.records)

    def test_h4_lands_near_full_solver(self, h4_setup):
        s, init, _, full = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        result = feedback_adpqe_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        assert result.converged
        assert abs(result.energy - full.energy) <= 5e-4

    def test_counts_mapping_and_residue_evaluations(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        result = feedback_adpqe_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        per_iteration = plan.n_principal + plan.n_auxiliary
        for k, record in enumerate(result.trace.records):
            assert record.cumulative_residue_evals == per_iteration * (k + 1)

    def test_reported_energy_is_composite_expectation(self, h4_setup):
        s, init, _, _ = h4_setup
        plan = partition_and_order(s.pool, init, 0.4, s.h.n_so)
        result = feedback_adpqe_solve(s.h_pauli, plan, init, s.eps, s.h.occupation)
        recomputed = bipartite_energy(
            s.h_pauli,
            plan,
            result.principal_params,
            result.auxiliary_params,
            s.h.occupation,
        )
        assert result.energy == pytest.approx(recomputed, abs=1e-12)


def fock_operator_pauli(eps, n_qubits) -> PauliSum:
    """Diagonal one-body operator sum_p eps_p a+_p a_p as Pauli terms."""
    total = PauliSum.zero(n_qubits)
    for p, value in enumerate(eps.eps):
        total = total + jordan_wigner(((p, True), (p, False)), value, n_qubits)
    return total


class TestStabilitySpectrum:
    def test_fock_only_map_is_superstable(self, hubbard_dimer):
        # The quasi-Newton map exactly cancels the diagonal one-body flow:
        # the Jacobian vanishes and every decay rate sits at -1.
        h, eps, _, pool, _ = dimer_setup(hubbard_dimer)
        fock = fock_operator_pauli(eps, h.n_so)
        ansatz = OrderedAnsatz(h.n_so, tuple(pool))
        spectrum = stability_spectrum(
            fock, ansatz, np.zeros(len(pool)), eps, h.occupation
        )
        assert spectrum.spectral_radius < 1e-6
        np.testing.assert_allclose(spectrum.rates, -1.0, atol=1e-6)

    def test_converged_h4_fixed_point_attracts(self, h4_setup):
        s, _, ansatz, full = h4_setup
        spectrum = stability_spectrum(
            s.h_pauli, ansatz, full.params, s.eps, s.h.occupation
        )
        assert spectrum.spectral_radius < 1.0
        assert spectrum.rates.real.max() < 0.0

    def test_dimer_fixed_point_is_a_symmetry_protected_saddle(self, hubbard_dimer):
        # At U/t = 4 the discrete map overshoots along the single-excitation
        # directions (|1 + rate| > 1 when rate < -2) even though the
        # continuous flow is stable.  Convergence still happens because the
        # iteration starts, and stays, on the symmetric singles-free
        # manifold.  A transverse kick must grow at the Jacobian's rate.
        from pqelab.pqe import PqeConfig

        h, eps, h_pauli, pool, init = dimer_setup(hubbard_dimer)
        ansatz = OrderedAnsatz(h.n_so, tuple(pool))
        solved = pqe_solve(
            h_pauli, ansatz, init, eps, h.occupation,
            PqeConfig(residue_tolerance=1e-12),
        )
        single_slots = [i for i, exc in enumerate(pool) if exc.rank == 1]
        np.testing.assert_allclose(solved.params[single_slots], 0.0, atol=1e-12)
        spectrum = stability_spectrum(
            h_pauli, ansatz, solved.params, eps, h.occupation
        )
        assert spectrum.spectral_radius > 1.0
        assert spectrum.rates.real.max() < 0.0
        assert spectrum.dominant_slots[0] in single_slots
        denominators = np.array([mp2_denominator(exc, eps) for exc in pool])
        theta = solved.params.copy()
        theta[single_slots[0]] += 1e-6
        norms = []
        for _ in range(4):
            residues = residue_projection(h_pauli, ansatz, theta, h.occupation)
            norms.append(np.abs(residues).max())
            theta = theta + residues / denominators
        growth = np.array(norms[1:]) / np.array(norms[:-1])
        np.testing.assert_allclose(growth, spectrum.spectral_radius, rtol=0.1)

    def test_rates_are_shifted_eigenvalues(self, hubbard_dimer):
        h, eps, h_pauli, pool, init = dimer_setup(hubbard_dimer)
        ansatz = OrderedAnsatz(h.n_so, tuple(pool))
        spectrum = stability_spectrum(h_pauli, ansatz, init, eps, h.occupation)
        np.testing.assert_allclose(
            spectrum.rates, spectrum.eigenvalues - 1.0, atol=0
        )
        assert len(spectrum.dominant_slots) == len(pool)
        assert all(0 <= s < len(pool) for s in spectrum.dominant_slots)
        assert spectrum.moduli[0] == spectrum.spectral_radius

    def test_validation(self, hubbard_dimer):
        h, eps, h_pauli, pool, _ = dimer_setup(hubbard_dimer)
        ansatz = OrderedAnsatz(h.n_so, tuple(pool))
        with pytest.raises(ValueError, match="parameters"):
            stability_spectrum(h_pauli, ansatz, np.zeros(2), eps, h.occupation)
        with pytest.raises(ValueError, match="step"):
            stability_spectrum(
                h_pauli, ansatz, np.zeros(len(pool)), eps, h.occupation, step=0.0
            )
