"""Spectral and Monte Carlo tools for invariant measures of the periodic Benjamin-Ono equation."""

from .spectral import SpectralField, ComplexField
from .energies import EnergySpec, CutoffSpec, builtin_energy, energy_value, density_F
from .gaussian import GaussianEnsemble, sample_field, sample_batch, wick_expectation
from .flow import FlowConfig, Trajectory, evolve, energy_drift
from .gstar import DriftSpec, g_value, pstar_decay_experiment

__all__ = [
    "SpectralField", "ComplexField",
    "EnergySpec", "CutoffSpec", "builtin_energy", "energy_value", "density_F",
    "GaussianEnsemble", "sample_field", "sample_batch", "wick_expectation",
    "FlowConfig", "Trajectory", "evolve", "energy_drift",
    "DriftSpec", "g_value", "pstar_decay_experiment",
]
