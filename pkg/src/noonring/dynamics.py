"""Exact unitary evolution and ideal projective site measurement.

Evolution uses the one-time eigendecomposition of the (time-independent)
Hamiltonian: exp(-i H t) |psi> = V exp(-i Lambda t) V+ |psi>.  No
time-stepping integrator is involved, so there are no step-size tolerances;
at sector dimensions <= ~2000 this is both exact and fast.

Measurement of a site occupation is ideal and instantaneous: outcome r
occurs with the summed weight of all basis states carrying occupation r at
that site, and the post-measurement state is the renormalized projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import QuantumState, _check_site
from .model import HermitianOperator


@dataclass(frozen=True)
class EvolutionPlan:
    """One evolution segment: a Hamiltonian and a duration in seconds."""

    hamiltonian: HermitianOperator
    duration: float

    def __post_init__(self):
        if self.duration < 0.0:
            raise ValueError(f"duration must be >= 0, got {self.duration:g}")


@dataclass(frozen=True)
class MeasurementRecord:
    """Projective occupation measurement at one site."""

    site: int
    outcome: int
    probability: float
    post_state: QuantumState


def evolve(state: QuantumState, plan: EvolutionPlan) -> QuantumState:
    """Apply exp(-i H t) through the cached eigendecomposition of H."""
    if plan.hamiltonian.basis is not state.basis:
        raise ValueError("state and Hamiltonian use different bases")
    if plan.duration == 0.0:
        return state.copy()
    eigenvalues, eigenvectors = plan.hamiltonian.eigensystem()
    phases = np.exp(-1j * eigenvalues * plan.duration)
    amplitudes = eigenvectors @ (phases * (eigenvectors.conj().T @ state.amplitudes))
    return QuantumState(state.basis, amplitudes)


def evolve_for(state: QuantumState, hamiltonian: HermitianOperator, duration: float) -> QuantumState:
    return evolve(state, EvolutionPlan(hamiltonian, duration))


def measure_distribution(state: QuantumState, site: int) -> list[tuple[int, float]]:
    """Occupation distribution at a site: [(outcome r, probability), ...].

    Only outcomes with nonzero probability are listed, in ascending r.
    """
    j = _check_site(site)
    weights = np.abs(state.amplitudes) ** 2
    occupations = state.basis.occupations[:, j]
    probabilities = np.bincount(
        occupations, weights=weights, minlength=state.basis.n_total + 1
    )
    return [(int(r), float(p)) for r, p in enumerate(probabilities) if p > 0.0]


def project(state: QuantumState, site: int, outcome: int) -> MeasurementRecord:
    """Project onto the outcome subspace of a site occupation measurement."""
    j = _check_site(site)
    mask = state.basis.occupations[:, j] == outcome
    amplitudes = np.where(mask, state.amplitudes, 0.0)
    probability = float(np.sum(np.abs(amplitudes) ** 2))
    if probability <= 0.0:
        raise ValueError(
            f"impossible outcome: occupation {outcome} at site {site} has zero probability"
        )
    post = QuantumState(state.basis, amplitudes / np.sqrt(probability))
    return MeasurementRecord(site=site, outcome=int(outcome), probability=probability, post_state=post)
