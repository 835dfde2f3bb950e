"""Standard initial data used by the experiments, demos and command line."""

from __future__ import annotations

import numpy as np

from .core_grid import Field, GridSpec, StatePair
from .deviation_lab import radial_shell
from .multipliers import LatticeBox, dyadic_project
from .propagator import FreeWave
from .randomizer import randomize, sample_coeffs

__all__ = ["gaussian", "outgoing_shell", "PROFILES", "profile", "randomized_split"]


def gaussian(grid: GridSpec, width: float = 1.0, amplitude: float = 1.0) -> Field:
    return Field(grid, amplitude * np.exp(-((grid.radius / width) ** 2)))


def outgoing_shell(grid: GridSpec, r0: float = 3.0, width: float = 0.8, amplitude: float = 0.3) -> StatePair:
    """A radial shell ``a (r0/r)^{3/2} exp(-((r - r0)/w)^2)`` with the velocity
    of a purely outgoing wave, ``v_t = -v_r - 3v/(2r)``, to leading order."""
    r = grid.radius_reg
    prof = np.exp(-(((grid.radius - r0) / width) ** 2))
    dprof = -2.0 * (grid.radius - r0) / width ** 2 * prof
    decay = (r0 / r) ** 1.5
    pos = amplitude * prof * decay
    pos_r = amplitude * (dprof * decay - 1.5 * prof * decay / r)
    vel = -pos_r - 1.5 * pos / r
    return StatePair.from_arrays(grid, pos, vel)


def _shell(grid, width=0.35, amplitude=1.0, radius=4.0):
    return radial_shell(grid, radius, width) * amplitude


PROFILES = {
    "zero": lambda grid, width=1.0, amplitude=1.0: Field.zeros(grid),
    "gaussian": gaussian,
    "shell": _shell,
}


def profile(name: str, grid: GridSpec, width: float = 1.0, amplitude: float = 1.0) -> Field:
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; choose from {sorted(PROFILES)}")
    return PROFILES[name](grid, width=width, amplitude=amplitude)


def randomized_split(f0: Field, f1: Field | None, seed: int, sample: int = 0, threshold: float = 1):
    """Randomize ``(f0, f1)`` and split at the dyadic ``threshold``.

    Returns the low-frequency initial state ``(P_{<=N} f0^w, P_{<=N} f1^w)``
    and the forcing ``S(t)(P_{>N} f0^w, P_{>N} f1^w)``.
    """
    g = f0.grid
    box = LatticeBox.for_grid(g)
    a = randomize(f0, sample_coeffs(seed, box, sample, stream=0))
    b = Field.zeros(g) if f1 is None else randomize(f1, sample_coeffs(seed, box, sample, stream=1))
    init = StatePair(dyadic_project(a, threshold, "le"), dyadic_project(b, threshold, "le"), 0.0)
    high = StatePair(dyadic_project(a, threshold, "gt"), dyadic_project(b, threshold, "gt"), 0.0)
    return init, FreeWave.from_state(high, description=f"free-evolution-of-coeffs(seed={seed},sample={sample})")
