"""Randomized data and the forced defocusing cubic wave equation on periodic
grids: unit-scale randomization, exact free flow, a Strang-split solver,
Morawetz diagnostics and Monte Carlo probes of the large-deviation bounds.
"""

__version__ = "0.1.0"

from .core_grid import Field, GridSpec, StatePair, make_grid
from .nlw_solver import Trajectory, energy, solve
from .propagator import FreeWave, free_evolve
from .randomizer import CoeffSet, randomize, sample_coeffs

__all__ = [
    "__version__",
    "Field",
    "GridSpec",
    "StatePair",
    "make_grid",
    "Trajectory",
    "energy",
    "solve",
    "FreeWave",
    "free_evolve",
    "CoeffSet",
    "randomize",
    "sample_coeffs",
]
