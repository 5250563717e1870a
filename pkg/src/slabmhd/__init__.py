"""Spectral solver and diagnostics for weakly nonlinear Alfvén waves in a thin slab."""

from .core import ElsasserState, Grid2D, GridSpec, PhysParams, WeightContext, gaussian_packet
from .diagnostics import EnergyLedger
from .experiments import delta_limit_experiment, rigidity_experiment, uniformity_sweep
from .scattering import ScatteringField, scattering_run
from .solver2d import ElsasserState2D, Solver2D, gaussian_packet_2d
from .solver3d import Solver3D, rescaled_solver

__all__ = [
    "ElsasserState",
    "ElsasserState2D",
    "EnergyLedger",
    "Grid2D",
    "GridSpec",
    "PhysParams",
    "ScatteringField",
    "Solver2D",
    "Solver3D",
    "WeightContext",
    "delta_limit_experiment",
    "gaussian_packet",
    "gaussian_packet_2d",
    "rescaled_solver",
    "rigidity_experiment",
    "scattering_run",
    "uniformity_sweep",
]
__version__ = "0.1.0"
