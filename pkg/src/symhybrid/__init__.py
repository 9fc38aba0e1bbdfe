"""Symbolic hybrid quantum-classical dynamics on polynomial observables."""

from .weyl_algebra import OperatorPolynomial, commutator, multiply, symmetrize
from .hybrid_algebra import HybridObservable, bracket, dagger, star
from .dynamics import EvolutionConfig, evolve_series, propagator_series
from .scenario import Scenario, run

__all__ = [
    "OperatorPolynomial",
    "commutator",
    "multiply",
    "symmetrize",
    "HybridObservable",
    "bracket",
    "dagger",
    "star",
    "EvolutionConfig",
    "evolve_series",
    "propagator_series",
    "Scenario",
    "run",
]
