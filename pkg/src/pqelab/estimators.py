"""Estimator-style front ends for the residue-driven solvers.

These wrappers follow the scikit-learn parameter protocol: hyperparameters
are constructor arguments stored verbatim, ``fit`` consumes a spin-orbital
Hamiltonian and sets trailing-underscore attributes, and ``get_params`` /
``set_params`` / ``clone`` work for free.  They exist so experiment code can
sweep hyperparameters with standard tooling; the functional solver layer
underneath remains the primary API.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .adpqe import feedback_adpqe_solve, nfc_solve, partition_and_order
from .hamiltonian import (
    MolecularIntegrals,
    SpinOrbitalHamiltonian,
    compute_fock,
    spatial_to_spin_orbital,
)
from .operators import excitation_pool, hamiltonian_to_pauli
from .pqe import PqeConfig, initialize_parameters, pqe_solve
from .statevector import OrderedAnsatz

__all__ = ["PqeSolver", "NfcAdPqeSolver", "FeedbackAdPqeSolver"]


def _as_spin_orbital(problem) -> SpinOrbitalHamiltonian:
    if isinstance(problem, SpinOrbitalHamiltonian):
        return problem
    if isinstance(problem, MolecularIntegrals):
        return spatial_to_spin_orbital(problem)
    raise TypeError(
        "expected SpinOrbitalHamiltonian or MolecularIntegrals, got "
        f"{type(problem).__name__}"
    )


class _ResidueSolverBase(BaseEstimator):
    """Shared problem preparation: Fock diagonal, pool, mapping, first guess."""

    def _prepare(self, problem):
        h = _as_spin_orbital(problem)
        eps = compute_fock(h)
        pool = excitation_pool(h)
        h_pauli = hamiltonian_to_pauli(h)
        init = initialize_parameters(h, eps, pool=pool, h_pauli=h_pauli)
        self.h_ = h
        self.eps_ = eps
        self.pool_ = pool
        self.h_pauli_ = h_pauli
        self.initial_params_ = init
        return h, eps, pool, h_pauli, init

    def _solver_config(self) -> PqeConfig:
        return PqeConfig(
            max_iterations=self.max_iterations,
            residue_tolerance=self.residue_tolerance,
        )


class PqeSolver(_ResidueSolverBase):
    """Full-pool projective solver.

    ``f_pps=None`` keeps the deterministic pool ordering.  Setting a value
    reorders the circuit by the amplitude partition (principal block first);
    all parameters are still iterated, so at ``f_pps=1`` this is exactly the
    ordering the decoupled solver uses, making traces directly comparable.
    """

    def __init__(
        self,
        max_iterations: int = 200,
        residue_tolerance: float = 1e-5,
        f_pps: float | None = None,
    ):
        self.max_iterations = max_iterations
        self.residue_tolerance = residue_tolerance
        self.f_pps = f_pps

    def fit(self, problem, y=None):
        h, eps, pool, h_pauli, init = self._prepare(problem)
        if self.f_pps is None:
            ansatz = OrderedAnsatz(h.n_so, tuple(pool))
            params0 = init
        else:
            plan = partition_and_order(pool, init, self.f_pps, h.n_so)
            order = plan.principal_slots + plan.auxiliary_slots
            ansatz = OrderedAnsatz(h.n_so, tuple(pool[s] for s in order))
            params0 = init[list(order)]
            self.plan_ = plan
        result = pqe_solve(
            h_pauli, ansatz, params0, eps, eps.occupation, self._solver_config()
        )
        self.ansatz_ = ansatz
        self.result_ = result
        self.params_ = result.params
        self.energy_ = result.energy
        self.trace_ = result.trace
        self.converged_ = result.converged
        self.n_iter_ = result.n_iterations
        return self


class NfcAdPqeSolver(_ResidueSolverBase):
    """Decoupled solver: iterate the principal block without feedback, then
    map the auxiliary amplitudes once and apply the closed-form correction."""

    def __init__(
        self,
        f_pps: float = 1.0,
        max_iterations: int = 200,
        residue_tolerance: float = 1e-5,
    ):
        self.f_pps = f_pps
        self.max_iterations = max_iterations
        self.residue_tolerance = residue_tolerance

    def fit(self, problem, y=None):
        h, eps, pool, h_pauli, init = self._prepare(problem)
        plan = partition_and_order(pool, init, self.f_pps, h.n_so)
        result = nfc_solve(
            h_pauli, plan, init, eps, eps.occupation, self._solver_config()
        )
        self.plan_ = plan
        self.result_ = result
        self.energy_ = result.energy
        self.principal_energy_ = result.e_principal
        self.correction_ = result.correction
        self.principal_params_ = result.principal_params
        self.auxiliary_params_ = result.auxiliary_params
        self.trace_ = result.trace
        self.converged_ = result.converged
        self.n_iter_ = sum(
            1 for record in result.trace.records if record.kind == "iteration"
        )
        return self


class FeedbackAdPqeSolver(_ResidueSolverBase):
    """Coupled variant: auxiliaries are re-mapped every iteration and the
    principal residues are evaluated through the composite circuit."""

    def __init__(
        self,
        f_pps: float = 1.0,
        max_iterations: int = 200,
        residue_tolerance: float = 1e-5,
    ):
        self.f_pps = f_pps
        self.max_iterations = max_iterations
        self.residue_tolerance = residue_tolerance

    def fit(self, problem, y=None):
        h, eps, pool, h_pauli, init = self._prepare(problem)
        plan = partition_and_order(pool, init, self.f_pps, h.n_so)
        result = feedback_adpqe_solve(
            h_pauli, plan, init, eps, eps.occupation, self._solver_config()
        )
        self.plan_ = plan
        self.result_ = result
        self.energy_ = result.energy
        self.principal_params_ = result.principal_params
        self.auxiliary_params_ = result.auxiliary_params
        self.trace_ = result.trace
        self.converged_ = result.converged
        self.n_iter_ = sum(
            1 for record in result.trace.records if record.kind == "iteration"
        )
        return self
