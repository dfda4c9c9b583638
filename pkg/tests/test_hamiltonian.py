"""Spin-orbital lifting, lattice models, Fock diagonals, and denominators."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from pqelab.hamiltonian import (
    DegenerateDenominatorError,
    MolecularIntegrals,
    NonCanonicalOrbitalsWarning,
    OrbitalEnergies,
    SpinOrbitalHamiltonian,
    build_hubbard_chain,
    compute_fock,
    fock_matrix,
    hartree_fock_energy,
    mp2_denominator,
    spatial_to_spin_orbital,
)
from pqelab.operators import Excitation, hamiltonian_to_pauli
from pqelab.statevector import expectation, reference_state

from conftest import random_molecular_integrals

SEED = 20240819


class TestMolecularIntegrals:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            MolecularIntegrals(2, 2, 0.0, np.zeros((3, 3)), np.zeros((2,) * 4))
        with pytest.raises(ValueError):
            MolecularIntegrals(2, 2, 0.0, np.zeros((2, 2)), np.zeros((3,) * 4))

    def test_electron_count_bounds(self):
        with pytest.raises(ValueError):
            MolecularIntegrals(1, 3, 0.0, np.zeros((1, 1)), np.zeros((1,) * 4))

    def test_asymmetric_one_body_rejected(self):
        h1 = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValueError):
            MolecularIntegrals(2, 2, 0.0, h1, np.zeros((2,) * 4))


class TestSpinOrbitalLift:
    def test_single_orbital_block_diagonal(self):
        mi = MolecularIntegrals(1, 2, 0.0, np.array([[-1.25]]), np.zeros((1,) * 4))
        h = spatial_to_spin_orbital(mi)
        assert h.n_so == 2
        np.testing.assert_allclose(h.h1_so, -1.25 * np.eye(2), atol=1e-14)

    def test_spin_blocks_vanish_between_alpha_and_beta(self):
        rng = np.random.default_rng(SEED)
        h = spatial_to_spin_orbital(random_molecular_integrals(rng, 3, 2))
        for p in range(h.n_so):
            for q in range(h.n_so):
                if p % 2 != q % 2:
                    assert h.h1_so[p, q] == 0.0

    def test_antisymmetry_of_two_body_tensor(self):
        rng = np.random.default_rng(SEED + 1)
        h = spatial_to_spin_orbital(random_molecular_integrals(rng, 2, 2))
        g = h.g2_anti
        np.testing.assert_allclose(g, -g.transpose(1, 0, 2, 3), atol=1e-12)
        np.testing.assert_allclose(g, -g.transpose(0, 1, 3, 2), atol=1e-12)
        np.testing.assert_allclose(g, g.transpose(2, 3, 0, 1), atol=1e-12)

    def test_same_index_diagonal_vanishes(self):
        rng = np.random.default_rng(SEED + 2)
        h = spatial_to_spin_orbital(random_molecular_integrals(rng, 3, 4))
        for p in range(h.n_so):
            assert h.g2_anti[p, p, p, p] == pytest.approx(0.0, abs=1e-14)

    def test_occupation_fills_lowest_spin_orbitals(self):
        rng = np.random.default_rng(SEED + 3)
        h = spatial_to_spin_orbital(random_molecular_integrals(rng, 3, 4))
        assert h.occupation == (0, 1, 2, 3)

    def test_capacity_check(self):
        rng = np.random.default_rng(SEED + 4)
        mi = random_molecular_integrals(rng, 2, 2)
        from dataclasses import replace

        with pytest.raises(ValueError):
            spatial_to_spin_orbital(replace(mi, nelec=5))

    def test_reference_energy_matches_simulator(self):
        rng = np.random.default_rng(SEED + 5)
        for norb, nelec in ((2, 2), (3, 2), (3, 4)):
            h = spatial_to_spin_orbital(random_molecular_integrals(rng, norb, nelec))
            op = hamiltonian_to_pauli(h)
            psi = reference_state(h.occupation, h.n_so)
            assert expectation(op, psi) == pytest.approx(
                hartree_fock_energy(h), abs=1e-10
            )


class TestHubbardChain:
    def test_one_body_matrix_is_diagonal_in_its_eigenbasis(self):
        h, _ = build_hubbard_chain(sites=4, t=1.0, u=2.0, nelec=4)
        off = h.h1_so - np.diag(np.diag(h.h1_so))
        assert np.abs(off).max() < 1e-12

    def test_non_interacting_filling(self):
        h, eps = build_hubbard_chain(sites=2, t=1.0, u=0.0, nelec=2)
        assert hartree_fock_energy(h) == pytest.approx(-2.0, abs=1e-12)
        np.testing.assert_allclose(np.sort(eps.eps)[:2], [-1.0, -1.0], atol=1e-12)

    def test_single_site_energy_is_u(self):
        h, _ = build_hubbard_chain(sites=1, t=1.0, u=2.0, nelec=2)
        assert hartree_fock_energy(h) == pytest.approx(2.0, abs=1e-12)

    def test_single_site_independent_of_hopping(self):
        a, _ = build_hubbard_chain(sites=1, t=1.0, u=2.0, nelec=2)
        b, _ = build_hubbard_chain(sites=1, t=7.5, u=2.0, nelec=2)
        np.testing.assert_allclose(a.h1_so, b.h1_so, atol=1e-14)
        np.testing.assert_allclose(a.g2_anti, b.g2_anti, atol=1e-14)

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            build_hubbard_chain(sites=0, t=1.0, u=1.0, nelec=0)
        with pytest.raises(ValueError):
            build_hubbard_chain(sites=2, t=1.0, u=1.0, nelec=5)

    @pytest.mark.filterwarnings("ignore::pqelab.hamiltonian.NonCanonicalOrbitalsWarning")
    def test_occupation_fills_lowest_orbitals(self):
        # a doped chain is legitimately non-canonical; only ordering matters here
        h, eps = build_hubbard_chain(sites=3, t=1.0, u=1.5, nelec=4)
        assert h.occupation == (0, 1, 2, 3)
        occupied = eps.eps[list(h.occupation)]
        virtual = eps.eps[[p for p in range(h.n_so) if p not in h.occupation]]
        assert occupied.max() < virtual.min()


class TestFock:
    def test_non_interacting_fock_is_the_one_body_diagonal(self):
        h1 = np.diag([-2.0, -1.0, 0.5])
        mi = MolecularIntegrals(3, 2, 0.0, h1, np.zeros((3,) * 4))
        h = spatial_to_spin_orbital(mi)
        eps = compute_fock(h)
        np.testing.assert_allclose(
            eps.eps, np.repeat(np.diag(h1), 2), atol=1e-14
        )

    def test_reference_energy_identity(self, hubbard_dimer):
        h, _ = hubbard_dimer
        op = hamiltonian_to_pauli(h)
        psi = reference_state(h.occupation, h.n_so)
        assert hartree_fock_energy(h) == pytest.approx(expectation(op, psi), abs=1e-10)

    def test_diagnostic_for_non_canonical_orbitals(self):
        h1 = np.array([[0.0, 0.3], [0.3, 1.0]])
        mi = MolecularIntegrals(2, 2, 0.0, h1, np.zeros((2,) * 4))
        h = spatial_to_spin_orbital(mi)
        with pytest.warns(NonCanonicalOrbitalsWarning):
            compute_fock(h)

    def test_canonical_orbitals_stay_silent(self, hubbard_dimer):
        h, _ = hubbard_dimer
        with warnings.catch_warnings():
            warnings.simplefilter("error", NonCanonicalOrbitalsWarning)
            compute_fock(h)

    def test_full_matrix_agrees_with_diagonal_extraction(self, hubbard_dimer):
        h, eps = hubbard_dimer
        np.testing.assert_allclose(np.diag(fock_matrix(h)), eps.eps, atol=1e-12)


class TestDenominator:
    def _eps(self):
        return OrbitalEnergies(
            eps=np.array([-1.5, -1.5, -0.5, -0.5, 0.3, 0.3, 1.1, 1.1]),
            occupation=(0, 1, 2, 3),
        )

    def test_single_is_occupied_minus_virtual(self):
        eps = self._eps()
        assert mp2_denominator(Excitation((0,), (4,)), eps) == pytest.approx(-1.8)

    def test_double_sums_both_pairs(self):
        eps = self._eps()
        d = mp2_denominator(Excitation((0, 1), (4, 5)), eps)
        assert d == pytest.approx((-1.5 - 1.5) - (0.3 + 0.3))

    def test_gapped_reference_gives_negative_denominators(self, hubbard_dimer):
        h, eps = hubbard_dimer
        from pqelab.operators import excitation_pool

        for exc in excitation_pool(h):
            assert mp2_denominator(exc, eps) < 0.0

    def test_degenerate_gap_raises(self):
        eps = OrbitalEnergies(eps=np.array([-0.5, -0.5, -0.5, -0.5]), occupation=(0, 1))
        with pytest.raises(DegenerateDenominatorError):
            mp2_denominator(Excitation((0,), (2,)), eps)

    def test_out_of_range_index_rejected(self):
        eps = OrbitalEnergies(eps=np.array([-1.0, 1.0]), occupation=(0,))
        with pytest.raises(ValueError):
            mp2_denominator(Excitation((0,), (2,)), eps)
