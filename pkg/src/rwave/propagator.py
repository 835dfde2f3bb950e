"""Exact free wave evolution on the grid.

``S(t)(f0, f1) = cos(t|D|) f0 + sin(t|D|)/|D| f1`` is applied as a spectral
multiplier, so there is no time-stepping error and no CFL condition.
"""

from __future__ import annotations


import numpy as np

from .core_grid import Field, GridSpec, StatePair

__all__ = [
    "free_multipliers",
    "free_evolve",
    "half_wave",
    "linear_energy",
    "FreeWave",
]


def free_multipliers(omega: np.ndarray, t: float):
    """``cos(t w)``, ``sin(t w)/w`` (``t`` at ``w = 0``) and ``w sin(t w)``."""
    c = np.cos(t * omega)
    s = np.sin(t * omega)
    sinc = np.empty_like(omega)
    nz = omega > 0
    sinc[nz] = s[nz] / omega[nz]
    sinc[~nz] = t
    return c, sinc, omega * s


def free_evolve(u: StatePair, t: float) -> StatePair:
    """Evolve ``u`` by the linear wave flow for time ``t`` (any sign)."""
    g = u.grid
    p = g.rfft(u.pos.values.real)
    v = g.rfft(u.vel.values.real)
    c, sinc, ws = free_multipliers(g.rkmag, t)
    p_new = c * p + sinc * v
    v_new = -ws * p + c * v
    return StatePair.from_arrays(g, g.irfft(p_new), g.irfft(v_new), u.time + t)


def half_wave(f: Field, t: float, sign: int = 1) -> Field:
    """``exp(+- i t |D|) f`` in the representation of ``f``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    g = f.grid
    out = Field(g, f.spectral().values * np.exp(1j * sign * t * g.kmag), "spectral")
    return out if f.rep == "spectral" else out.physical()


def linear_energy(u: StatePair) -> float:
    """``1/2 ||grad u||^2 + 1/2 ||u_t||^2``, evaluated spectrally."""
    g = u.grid
    p = g.rfft(u.pos.values.real)
    v = g.rfft(u.vel.values.real)
    grad2 = g.half_norm_sq(p, g.rkmag ** 2)
    return 0.5 * g.cell_volume * (grad2 + g.half_norm_sq(v))


class FreeWave:
    """A free solution stored by its initial half-spectra; evaluates at any ``t``.

    Used as an exact-in-time forcing recipe.
    """

    def __init__(self, grid: GridSpec, pos_hat: np.ndarray, vel_hat: np.ndarray | None = None,
                 t0: float = 0.0, description: str = "free-evolution"):
        self.grid = grid
        self.pos_hat = pos_hat
        self.vel_hat = vel_hat
        self.t0 = float(t0)
        self.description = description

    @classmethod
    def from_state(cls, u: StatePair, description: str = "free-evolution") -> "FreeWave":
        g = u.grid
        vel = u.vel.values.real
        vh = g.rfft(vel) if np.any(vel) else None
        return cls(g, g.rfft(u.pos.values.real), vh, u.time, description)

    def spectrum(self, t: float):
        c, sinc, ws = free_multipliers(self.grid.rkmag, t - self.t0)
        p = c * self.pos_hat
        v = -ws * self.pos_hat
        if self.vel_hat is not None:
            p = p + sinc * self.vel_hat
            v = v + c * self.vel_hat
        return p, v

    def __call__(self, t: float) -> np.ndarray:
        c, sinc, _ = free_multipliers(self.grid.rkmag, t - self.t0)
        p = c * self.pos_hat
        if self.vel_hat is not None:
            p = p + sinc * self.vel_hat
        return self.grid.irfft(p)

    def state(self, t: float) -> StatePair:
        p, v = self.spectrum(t)
        return StatePair.from_arrays(self.grid, self.grid.irfft(p), self.grid.irfft(v), t)

    def scaled(self, factor: float) -> "FreeWave":
        vh = None if self.vel_hat is None else factor * self.vel_hat
        return FreeWave(self.grid, factor * self.pos_hat, vh, self.t0,
                        f"{self.description} x{factor:g}")
