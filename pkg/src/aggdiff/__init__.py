"""Desk-scale laboratory for aggregation-diffusion equations with power-law potentials."""

from .field import DensityField, Grid, init_profile, lp_norm, mass
from .kernel_model import (
    PotentialParams,
    Regime,
    classify,
    interaction_laplacian_form,
    laplacian_mass_f,
    potential_value,
    repulsion_zero_r0,
)
from .monitor import NormSeries, Verdict, boundedness_verdict
from .operators import KernelCache
from .solver import RunResult, SimConfig, run, step

__all__ = [
    "DensityField",
    "Grid",
    "init_profile",
    "lp_norm",
    "mass",
    "PotentialParams",
    "Regime",
    "classify",
    "interaction_laplacian_form",
    "laplacian_mass_f",
    "potential_value",
    "repulsion_zero_r0",
    "NormSeries",
    "Verdict",
    "boundedness_verdict",
    "KernelCache",
    "RunResult",
    "SimConfig",
    "run",
    "step",
]

__version__ = "0.1.0"
