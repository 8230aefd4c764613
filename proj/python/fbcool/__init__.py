"""Feedback cooling of an atom in an optical lattice."""

from ._core import (
    CHANNELS,
    ConfigError,
    ContractViolation,
    PhysicalParams,
    RunConfig,
    ScaledParams,
    SignalSource,
    band_energies,
    derive_scaled,
    fit_quadratic,
    harmonic_theory_inputs,
    run_ensemble,
    run_invariant_suite,
    run_trajectory,
    theory_energy,
)

__all__ = [
    "CHANNELS",
    "ConfigError",
    "ContractViolation",
    "PhysicalParams",
    "RunConfig",
    "ScaledParams",
    "SignalSource",
    "band_energies",
    "derive_scaled",
    "fit_quadratic",
    "harmonic_theory_inputs",
    "run_ensemble",
    "run_invariant_suite",
    "run_trajectory",
    "theory_energy",
]
