"""Diagnostics for the long-time argument: partition of the time axis by the
size of the forcing, forced-versus-unforced perturbation gaps, and a
wave-operator (pull-back by the free flow) convergence probe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_grid import Field, GridSpec, StatePair
from .nlw_solver import BLOWUP_LINF, _Integrator, as_forcing, project_dealiased
from .propagator import free_evolve

__all__ = [
    "PartitionPlan",
    "partition_by_forcing",
    "l6_cubed_profile",
    "GapReport",
    "perturbation_gap",
    "ProfilePoint",
    "scattering_profile",
    "profile_increments",
    "energy_distance",
]


def _values(F) -> np.ndarray:
    return np.asarray(F.values.real if isinstance(F, Field) else F, dtype=float)


def l6_cubed_profile(snaps, grid: GridSpec | None = None):
    """``(t_j, ||F(t_j)||_{L6}^3)`` from a sequence of ``(t, F)`` pairs."""
    times, vals = [], []
    for t, F in snaps:
        if F is None:
            vals.append(0.0)
        else:
            g = grid if grid is not None else getattr(F, "grid", None)
            if g is None:
                raise ValueError("plain array snapshots need an explicit grid")
            a = _values(F)
            a2 = a * a
            vals.append(math.sqrt(float(np.sum(a2 * a2 * a2)) * g.cell_volume))
        times.append(float(t))
    times = np.asarray(times)
    if times.size < 2 or np.any(np.diff(times) <= 0):
        raise ValueError("need at least two snapshots with strictly increasing times")
    return times, np.asarray(vals)


@dataclass
class PartitionPlan:
    """Consecutive intervals covering ``[t0, T]`` on which ``||F||_{L3L6}`` is ``eps``
    (the last one at most ``eps``)."""

    eps: float
    intervals: list
    norms: list
    total_norm: float
    times: np.ndarray = field(repr=False, default=None)
    density: np.ndarray = field(repr=False, default=None)

    @property
    def count(self) -> int:
        return len(self.intervals)

    @property
    def count_bound(self) -> int:
        """``ceil((||F|| / eps)^3)``, at least one."""
        return max(1, math.ceil((self.total_norm / self.eps) ** 3 - 1e-9))

    def recomposed_cube(self) -> float:
        return float(sum(n ** 3 for n in self.norms))

    def to_json(self) -> dict:
        return {
            "eps": self.eps,
            "intervals": [list(iv) for iv in self.intervals],
            "norms": list(self.norms),
            "total_norm": self.total_norm,
            "count": self.count,
            "count_bound": self.count_bound,
        }


def _piecewise_integral(t, y, a, b) -> float:
    """Exact integral over ``[a, b]`` of the piecewise-linear interpolant."""
    grid = np.concatenate([[a], t[(t > a) & (t < b)], [b]])
    vals = np.interp(grid, t, y)
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(grid)))


def _crossing(t0, t1, y0, y1, need) -> float:
    """Solve ``int_{t0}^{s} linear(y0 -> y1) = need`` for ``s`` in ``[t0, t1]``."""
    h = t1 - t0
    slope = (y1 - y0) / h
    if abs(slope) * h < 1e-14 * max(abs(y0), 1e-300):
        return t0 + need / y0
    # y0 s + slope s^2 / 2 = need, positive root, in a cancellation-free form
    disc = y0 * y0 + 2.0 * slope * need
    return t0 + 2.0 * need / (y0 + math.sqrt(max(disc, 0.0)))


def partition_by_forcing(F_snaps, eps: float, grid: GridSpec | None = None) -> PartitionPlan:
    """Greedy split of ``int ||F(t)||_{L6}^3 dt`` at multiples of ``eps^3``.

    ``F_snaps`` is a sequence of ``(t, F)``.  Between snapshots the density
    ``||F(t)||_{L6}^3`` is interpolated linearly, and interval endpoints are
    where its running integral crosses ``j eps^3`` exactly.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    t, y = l6_cubed_profile(F_snaps, grid)
    seg = 0.5 * (y[1:] + y[:-1]) * np.diff(t)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = float(cum[-1])
    target = eps ** 3
    ends = []
    j = 1
    while j * target < total * (1 - 1e-12):
        level = j * target
        i = int(np.searchsorted(cum, level, side="right")) - 1
        i = min(i, len(seg) - 1)
        ends.append(_crossing(t[i], t[i + 1], y[i], y[i + 1], level - cum[i]))
        j += 1
    edges = [float(t[0])] + ends + [float(t[-1])]
    intervals = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    norms = [_piecewise_integral(t, y, a, b) ** (1.0 / 3.0) for a, b in intervals]
    return PartitionPlan(eps, intervals, norms, total ** (1.0 / 3.0), t, y)


# -- perturbation gap --------------------------------------------------------------


@dataclass
class GapReport:
    """Forced ``v`` versus unforced ``u`` started from the same data."""

    interval: tuple
    energy_gap: float  # sup_t ||grad_{t,x}(u - v)||_{L2}
    strichartz_gap: float  # ||u - v||_{L3 L6}
    forcing_norm: float  # ||F||_{L3 L6} over the interval
    steps: int
    dt: float
    blowup: bool = False
    blowup_reason: str | None = None

    @property
    def total(self) -> float:
        return self.energy_gap + self.strichartz_gap

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["interval"] = list(self.interval)
        d["total"] = self.total
        return d


def energy_distance(g: GridSpec, dp_hat: np.ndarray, dv_hat: np.ndarray) -> float:
    """``(||grad dp||^2 + ||dv||^2)^{1/2}`` from half spectra."""
    return math.sqrt(g.cell_volume * (g.half_norm_sq(dp_hat, g.rkmag ** 2) + g.half_norm_sq(dv_hat)))


def _l6_cubed(g, a):
    a2 = a * a
    return math.sqrt(float(np.sum(a2 * a2 * a2)) * g.cell_volume)


def perturbation_gap(interval, u0: StatePair, F, dt: float | None = None,
                     dealias: bool = True) -> GapReport:
    """Solve with and without ``F`` from ``u0`` over ``interval`` in lockstep.

    Both norms of the difference and ``||F||_{L3L6}`` use the step grid
    (trapezoid in time).
    """
    t0, t1 = map(float, interval)
    if t1 <= t0:
        raise ValueError("interval must have positive length")
    g = u0.grid
    forcing = as_forcing(F)
    u0 = StatePair.from_arrays(g, u0.pos.values.real, u0.vel.values.real, t0)
    if dealias:
        u0 = project_dealiased(u0)
    if dt is None:
        dt = 0.5 * g.dx
    nsteps = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
    dt = (t1 - t0) / nsteps
    forced = _Integrator(g, dt, dealias, True)
    free = _Integrator(g, dt, dealias, True)
    forced.load(u0)
    free.load(u0)

    def sample(t):
        Ft = forcing(t)
        f_l6 = 0.0 if Ft is None else _l6_cubed(g, np.asarray(Ft))
        e = energy_distance(g, forced.p_hat - free.p_hat, forced.v_hat - free.v_hat)
        return e, _l6_cubed(g, forced.pos - free.pos), f_l6

    e_sup, s_prev, f_prev = sample(t0)
    s_int = f_int = 0.0
    blow, reason = False, None
    for n in range(1, nsteps + 1):
        Fh = forcing(t0 + (n - 0.5) * dt)
        forced.advance(Fh)
        free.advance(None)
        t = t0 + n * dt
        forced.t = free.t = t
        for it, name in ((forced, "forced"), (free, "unforced")):
            msg = it.check(BLOWUP_LINF)
            if msg:
                blow, reason = True, f"{name} run: {msg} at t={t:g}"
        if blow:
            break
        e, s, f = sample(t)
        e_sup = max(e_sup, e)
        s_int += 0.5 * (s + s_prev) * dt
        f_int += 0.5 * (f + f_prev) * dt
        s_prev, f_prev = s, f
    return GapReport((t0, t1), e_sup, s_int ** (1.0 / 3.0), f_int ** (1.0 / 3.0), nsteps, dt, blow, reason)


# -- scattering probe --------------------------------------------------------------


@dataclass
class ProfilePoint:
    t: float
    back: StatePair
    increment: float


def scattering_profile(traj) -> list[ProfilePoint]:
    """``V(t) = S(-t) u(t)`` per snapshot and the energy-norm distance to the
    previous ``V``.  The first point has no predecessor and increment 0."""
    out = []
    prev = None
    g = traj.grid
    for t, s in zip(traj.times, traj.states):
        back = free_evolve(s, -float(t))
        p = g.rfft(back.pos.values.real)
        v = g.rfft(back.vel.values.real)
        inc = 0.0 if prev is None else energy_distance(g, p - prev[0], v - prev[1])
        out.append(ProfilePoint(float(t), back, inc))
        prev = (p, v)
    return out


def profile_increments(profile) -> np.ndarray:
    """Increments between consecutive pull-backs (drops the first point)."""
    return np.array([p.increment for p in profile[1:]])
