"""Strang-split pseudospectral solver for ``-v_tt + Lap v = (F + v)^3``.

One step is kick / exact free drift / kick, with the forcing sampled at the
step midpoint for both kicks.  With ``F = 0`` this is the defocusing cubic
wave equation, whose energy the scheme conserves to second order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .core_grid import Field, GridSpec, StatePair, no_wrap_horizon, support_radius
from .propagator import FreeWave, free_multipliers

__all__ = [
    "BlowupError",
    "HorizonError",
    "ZeroForcing",
    "SnapshotForcing",
    "as_forcing",
    "Trajectory",
    "energy",
    "energy_flux",
    "dealias_mask",
    "project_dealiased",
    "step",
    "solve",
    "write_monitors",
]

BLOWUP_LINF = 1e6


class BlowupError(RuntimeError):
    """Non-finite values or ``|v| > 1e6``; carries the last finite state."""

    def __init__(self, message: str, state: StatePair, time: float):
        super().__init__(message)
        self.state = state
        self.time = time


class HorizonError(ValueError):
    pass


class Forcing(Protocol):
    description: str

    def __call__(self, t: float) -> np.ndarray | None: ...


class ZeroForcing:
    description = "zero"

    def __call__(self, t: float):
        return None


class SnapshotForcing:
    """Forcing from stored snapshots, linear in time between them."""

    def __init__(self, times, values, description: str = "snapshots"):
        self.times = np.asarray(times, dtype=float)
        self.values = [np.asarray(v.values.real if isinstance(v, Field) else v, dtype=float) for v in values]
        if len(self.values) != self.times.size or self.times.size < 1:
            raise ValueError("need one snapshot per time")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")
        self.description = description

    def __call__(self, t: float) -> np.ndarray:
        ts = self.times
        if t <= ts[0]:
            return self.values[0]
        if t >= ts[-1]:
            return self.values[-1]
        j = int(np.searchsorted(ts, t)) - 1
        a = (t - ts[j]) / (ts[j + 1] - ts[j])
        return (1 - a) * self.values[j] + a * self.values[j + 1]


class _ScaledForcing:
    def __init__(self, base, factor: float):
        self.base, self.factor = base, float(factor)
        self.description = f"{base.description} x{factor:g}"

    def __call__(self, t):
        f = self.base(t)
        return None if f is None else self.factor * f


def as_forcing(obj) -> Forcing:
    """Accept ``None``, a ``FreeWave``, a callable ``t -> array`` or a forcing object."""
    if obj is None:
        return ZeroForcing()
    if isinstance(obj, (ZeroForcing, SnapshotForcing, FreeWave, _ScaledForcing)):
        return obj
    if callable(obj):
        if not hasattr(obj, "description"):
            try:
                obj.description = getattr(obj, "__name__", "callable")
            except AttributeError:
                pass
        return obj
    raise TypeError(f"cannot interpret {obj!r} as a forcing")


def scale_forcing(forcing, factor: float) -> Forcing:
    forcing = as_forcing(forcing)
    if isinstance(forcing, FreeWave):
        return forcing.scaled(factor)
    if isinstance(forcing, ZeroForcing):
        return forcing
    return _ScaledForcing(forcing, factor)


# -- functionals -------------------------------------------------------------


def _energy_arrays(g: GridSpec, pos: np.ndarray, p_hat: np.ndarray, v_hat: np.ndarray) -> float:
    kin = g.half_norm_sq(p_hat, g.rkmag ** 2) + g.half_norm_sq(v_hat)
    return g.cell_volume * (0.5 * kin + 0.25 * float(np.sum(pos ** 4)))


def energy(u: StatePair) -> float:
    """``int 1/2|grad v|^2 + 1/2|v_t|^2 + 1/4 v^4`` on the grid."""
    g = u.grid
    pos = u.pos.values.real
    return _energy_arrays(g, pos, g.rfft(pos), g.rfft(u.vel.values.real))


def _flux_arrays(g: GridSpec, pos, vel, F) -> float:
    if F is None:
        return 0.0
    return -g.cell_volume * float(np.sum(vel * ((F + pos) ** 3 - pos ** 3)))


def energy_flux(u: StatePair, F_at_t) -> float:
    """``dE/dt = -int v_t ((F+v)^3 - v^3)``."""
    F = None if F_at_t is None else (F_at_t.values.real if isinstance(F_at_t, Field) else np.asarray(F_at_t))
    return _flux_arrays(u.grid, u.pos.values.real, u.vel.values.real, F)


def dealias_mask(grid: GridSpec) -> np.ndarray:
    """Half-spectrum mask of the 2/3 rule: keep ``|m_i| <= n/3`` on every axis."""
    n = grid.n_per_axis
    cut = n / 3.0
    keep = np.abs(grid.freq_index_1d) <= cut
    keep_half = np.arange(n // 2 + 1) <= cut
    return grid.outer([keep.astype(float)] * (grid.dim - 1) + [keep_half.astype(float)])


def project_dealiased(u: StatePair) -> StatePair:
    """Restrict a state to the band kept by :func:`dealias_mask`."""
    g = u.grid
    m = dealias_mask(g)
    pos = g.irfft(m * g.rfft(u.pos.values.real))
    vel = g.irfft(m * g.rfft(u.vel.values.real))
    return StatePair.from_arrays(g, pos, vel, u.time)


# -- integrator --------------------------------------------------------------


class _Integrator:
    """Holds the half-spectra of the state and the cached step multipliers."""

    def __init__(self, grid: GridSpec, dt: float, dealias: bool, nonlinear: bool):
        self.g = grid
        self.dt = float(dt)
        self.nonlinear = nonlinear
        self.mask = dealias_mask(grid) if dealias else None
        self.c, self.sinc, self.ws = free_multipliers(grid.rkmag, self.dt)

    def load(self, u: StatePair):
        self.pos = np.array(u.pos.values.real, dtype=float)
        self.p_hat = self.g.rfft(self.pos)
        self.v_hat = self.g.rfft(u.vel.values.real)
        self.t = float(u.time)

    def _kick(self, F, h: float):
        if not self.nonlinear:
            return
        w = self.pos if F is None else F + self.pos
        k = self.g.rfft(w * w * w)
        if self.mask is not None:
            k *= self.mask
        self.v_hat -= h * k

    def advance(self, F_half):
        h = 0.5 * self.dt
        self._kick(F_half, h)
        p, v = self.p_hat, self.v_hat
        self.p_hat = self.c * p + self.sinc * v
        self.v_hat = -self.ws * p + self.c * v
        self.pos = self.g.irfft(self.p_hat)
        self._kick(F_half, h)
        self.t += self.dt

    def vel(self) -> np.ndarray:
        return self.g.irfft(self.v_hat)

    def state(self) -> StatePair:
        return StatePair.from_arrays(self.g, self.pos, self.vel(), self.t)

    def check(self, threshold: float):
        if not np.all(np.isfinite(self.pos)) or not np.all(np.isfinite(self.v_hat)):
            return "non-finite values"
        m = float(np.max(np.abs(self.pos)))
        if m > threshold:
            return f"|v| = {m:.3e} exceeds {threshold:.1e}"
        return None


def step(u: StatePair, F_half, dt: float, dealias: bool = True, nonlinear: bool = True) -> StatePair:
    """One kick-drift-kick step; ``F_half`` is the forcing at ``u.time + dt/2``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    F = None if F_half is None else (F_half.values.real if isinstance(F_half, Field) else np.asarray(F_half))
    it = _Integrator(u.grid, dt, dealias, nonlinear)
    it.load(u)
    it.advance(F)
    msg = it.check(BLOWUP_LINF)
    if msg:
        raise BlowupError(f"blowup at t={it.t:g}: {msg}", u, u.time)
    return it.state()


@dataclass
class Trajectory:
    """Snapshots of a solve plus per-step monitor records."""

    grid: GridSpec
    times: np.ndarray
    states: list
    dt: float
    forcing_ref: str
    monitors: list = field(default_factory=list)
    blowup: bool = False
    blowup_time: float | None = None
    blowup_reason: str | None = None
    dealias: bool = True
    nonlinear: bool = True

    def __len__(self):
        return len(self.states)

    def monitor_array(self, key: str) -> np.ndarray:
        return np.array([m[key] for m in self.monitors], dtype=float)

    @property
    def monitor_times(self) -> np.ndarray:
        return self.monitor_array("t")

    def positions(self):
        return [(s.time, s.pos) for s in self.states]


def _l6_cubed(g: GridSpec, a: np.ndarray) -> float:
    a2 = a * a
    return math.sqrt(float(np.sum(a2 * a2 * a2)) * g.cell_volume)


def _monitor_record(it: _Integrator, F, morawetz: bool, l3l6_acc) -> dict:
    g = it.g
    vel = it.vel()
    rec = {
        "t": it.t,
        "energy": _energy_arrays(g, it.pos, it.p_hat, it.v_hat),
        "flux": _flux_arrays(g, it.pos, vel, F),
        "morawetz_density": None,
        "linf": float(np.max(np.abs(it.pos))),
    }
    if morawetz and g.dim == 4:
        from .morawetz import _functional_arrays

        rec["morawetz_density"] = _functional_arrays(g, it.pos, it.p_hat, vel)
    l6c = _l6_cubed(g, it.pos)
    if l3l6_acc["t"] is not None:
        l3l6_acc["sum"] += 0.5 * (l6c + l3l6_acc["last"]) * (it.t - l3l6_acc["t"])
    l3l6_acc["t"], l3l6_acc["last"] = it.t, l6c
    rec["l3l6_partial"] = l3l6_acc["sum"] ** (1.0 / 3.0)
    return rec


def solve(
    init: StatePair,
    forcing=None,
    T: float = 1.0,
    dt: float | None = None,
    snap_every: int = 1,
    *,
    dealias: bool = True,
    nonlinear: bool = True,
    monitor_every: int = 1,
    monitor_morawetz: bool = False,
    check_horizon: bool = True,
    data_radius: float | None = None,
    blowup_threshold: float = BLOWUP_LINF,
    stream=None,
) -> Trajectory:
    """Integrate from ``init`` over ``[t0, t0 + T]``.

    With dealiasing on, ``init`` is first restricted to the retained band
    (stored as the first snapshot), since the truncated kick conserves the
    discrete energy only there.  ``dt`` defaults to ``0.5 * dx`` and is shrunk so that an integer number
    of steps lands exactly on ``T``.  The final state is always stored.
    Non-finite values end the run early with ``blowup`` set.  If ``stream``
    is a writable text file, each monitor record is written to it as one
    JSON line.
    """
    g = init.grid
    if T <= 0:
        raise ValueError("T must be positive")
    forcing = as_forcing(forcing)
    if check_horizon:
        if data_radius is None:
            data_radius = max(support_radius(init.pos.values, g), support_radius(init.vel.values, g))
        horizon = no_wrap_horizon(g, data_radius)
        if T > horizon + 1e-12:
            raise HorizonError(
                f"T={T:g} exceeds the no-wrap horizon {horizon:g} "
                f"(box half-width {0.5 * g.length:g}, data radius {data_radius:g})"
            )
    if dt is None:
        dt = 0.5 * g.dx
    nsteps = max(1, int(math.ceil(T / dt - 1e-9)))
    dt = T / nsteps
    it = _Integrator(g, dt, dealias, nonlinear)
    if dealias and nonlinear:
        # the dealiased kick conserves the discrete energy only on the retained band
        init = project_dealiased(init)
    it.load(init)
    t0 = it.t

    traj = Trajectory(g, np.array([]), [], dt, getattr(forcing, "description", "custom"),
                      dealias=dealias, nonlinear=nonlinear)
    times, states = [t0], [init]
    acc = {"sum": 0.0, "t": None, "last": 0.0}

    def monitor():
        rec = _monitor_record(it, forcing(it.t), monitor_morawetz, acc)
        traj.monitors.append(rec)
        if stream is not None:
            stream.write(json.dumps(rec) + "\n")

    monitor()
    for n in range(1, nsteps + 1):
        prev = (it.pos.copy(), it.p_hat.copy(), it.v_hat.copy(), it.t)
        it.advance(forcing(t0 + (n - 0.5) * dt))
        it.t = t0 + n * dt
        msg = it.check(blowup_threshold)
        if msg:
            pos, p_hat, v_hat, t_prev = prev
            traj.blowup, traj.blowup_time, traj.blowup_reason = True, it.t, msg
            last = StatePair.from_arrays(g, pos, g.irfft(v_hat), t_prev)
            if times[-1] != t_prev:
                times.append(t_prev)
                states.append(last)
            break
        if n % monitor_every == 0 or n == nsteps:
            monitor()
        if n % snap_every == 0 or n == nsteps:
            times.append(it.t)
            states.append(it.state())
    traj.times = np.array(times)
    traj.states = states
    return traj


def write_monitors(traj: Trajectory, path) -> None:
    """Monitor records as JSON lines."""
    with open(path, "w") as fh:
        for rec in traj.monitors:
            fh.write(json.dumps(rec) + "\n")
