"""Four-dimensional Morawetz functional, its time-integrated identity, and the
energy/bulk quantities ``A(T)``, ``B(T)`` used for a priori energy bounds.

All ``1/|x|`` weights use the regularized radius ``max(|x|, dx/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_grid import GridSpec, StatePair
from .nlw_solver import Trajectory, as_forcing

__all__ = [
    "gradient",
    "morawetz_functional",
    "morawetz_terms",
    "morawetz_bulk",
    "morawetz_identity_residual",
    "bootstrap_quantities",
    "MorawetzResidual",
    "BootstrapReport",
    "fit_family_constant",
]


def _require_4d(g: GridSpec):
    if g.dim != 4:
        raise ValueError(f"the Morawetz quantities are defined for d = 4, got d = {g.dim}")


def _deriv_symbol(g: GridSpec, axis: int) -> np.ndarray:
    """``i xi_axis`` on the half spectrum with the Nyquist bin zeroed."""
    n = g.n_per_axis
    if axis == g.dim - 1:
        xi = g.rfreqs_1d.copy()
        xi[-1] = 0.0
    else:
        xi = g.freqs_1d.copy()
        xi[n // 2] = 0.0
    return 1j * g.axis_view(xi, axis)


def gradient(g: GridSpec, p_hat: np.ndarray) -> list[np.ndarray]:
    return [g.irfft(_deriv_symbol(g, ax) * p_hat) for ax in range(g.dim)]


def _radial_derivative(g: GridSpec, grad) -> np.ndarray:
    out = np.zeros(g.shape)
    for ax, d in enumerate(grad):
        out += g.unit_direction(ax) * d
    return out


def _functional_arrays(g: GridSpec, pos, p_hat, vel) -> float:
    grad = gradient(g, p_hat)
    dr = _radial_derivative(g, grad)
    dens = -(dr + 1.5 * pos / g.radius_reg) * vel
    return float(np.sum(dens)) * g.cell_volume


def morawetz_functional(u: StatePair) -> float:
    """``int -(x/|x|).grad v v_t - (3/2)(v/|x|) v_t dx``."""
    g = u.grid
    _require_4d(g)
    pos = u.pos.values.real
    return _functional_arrays(g, pos, g.rfft(pos), u.vel.values.real)


def morawetz_terms(u: StatePair, F=None, pointwise: bool = False):
    """The four right-hand-side integrals of the Morawetz identity at one time.

    Returns ``(quartic, hardy, angular, forcing)``; with ``pointwise`` the
    integrand arrays are returned instead of their integrals.
    """
    g = u.grid
    _require_4d(g)
    pos = u.pos.values.real
    r = g.radius_reg
    grad = gradient(g, g.rfft(pos))
    dr = _radial_derivative(g, grad)
    grad_sq = sum(d * d for d in grad)
    quartic = 0.75 * pos ** 4 / r
    hardy = 0.75 * pos ** 2 / r ** 3
    angular = (grad_sq - dr * dr) / r
    if F is None:
        forcing = np.zeros(g.shape)
    else:
        F = np.asarray(getattr(F, "values", F)).real
        forcing = (1.5 * pos / r + dr) * ((F + pos) ** 3 - pos ** 3)
    terms = (quartic, hardy, angular, forcing)
    if pointwise:
        return terms
    cv = g.cell_volume
    return tuple(float(np.sum(t)) * cv for t in terms)


def _bulk_density(u: StatePair) -> float:
    g = u.grid
    pos = u.pos.values.real
    return float(np.sum(pos ** 4 / g.radius_reg)) * g.cell_volume


def _cumtrapz(t, y):
    t, y = np.asarray(t, float), np.asarray(y, float)
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def morawetz_bulk(traj: Trajectory, cumulative: bool = False):
    """``int int v^4/|x| dx dt`` over the stored snapshots (trapezoid in time)."""
    _require_4d(traj.grid)
    dens = [_bulk_density(s) for s in traj.states]
    if len(dens) < 2:
        return np.zeros(len(dens)) if cumulative else 0.0
    curve = _cumtrapz(traj.times, dens)
    return curve if cumulative else float(curve[-1])


@dataclass
class MorawetzResidual:
    times: np.ndarray
    functional: np.ndarray
    terms: np.ndarray  # shape (n_snapshots, 4)
    per_interval: np.ndarray
    total: float
    scale: float

    @property
    def relative(self) -> float:
        return self.total / self.scale if self.scale > 0 else 0.0


def morawetz_identity_residual(traj: Trajectory, forcing=None) -> MorawetzResidual:
    """``|M(t1) - M(t0) - int (four terms) dt|`` per snapshot interval and overall."""
    _require_4d(traj.grid)
    forcing = as_forcing(forcing)
    M, terms = [], []
    for s in traj.states:
        M.append(morawetz_functional(s))
        terms.append(morawetz_terms(s, forcing(s.time)))
    M = np.array(M)
    terms = np.array(terms)
    t = np.asarray(traj.times)
    rhs = terms.sum(axis=1)
    if len(t) < 2:
        return MorawetzResidual(t, M, terms, np.zeros(0), 0.0, 0.0)
    inc = 0.5 * (rhs[1:] + rhs[:-1]) * np.diff(t)
    per = np.diff(M) - inc
    total = abs(float(M[-1] - M[0] - inc.sum()))
    scale = float(np.trapezoid(np.abs(terms).sum(axis=1), t))
    return MorawetzResidual(t, M, terms, per, total, scale)


@dataclass
class BootstrapReport:
    """``A(T)``, ``B(T)`` and the ingredients of the bootstrap inequalities."""

    T: float
    A: float
    A_variation: float
    B: float
    A_curve: np.ndarray
    B_curve: np.ndarray
    E0: float
    sup_energy: float
    forcing_l3l6: float
    forcing_weighted_l2linf: float
    energy_norm_sup_sq: float
    grad_sup: float
    nonlinear_l1l2: float
    a_ratio: float
    bulk_ratio: float

    @property
    def energy_bound_holds(self) -> bool:
        """``sup_t E(v(t)) <= E(0) + A(T)`` with ``A`` the energy variation."""
        return self.sup_energy <= self.E0 + self.A_variation

    def a_inequality_holds(self, C: float) -> bool:
        rhs = math.sqrt(self.E0 + self.A) * (
            self.forcing_l3l6 ** 3 + self.forcing_weighted_l2linf * math.sqrt(self.B)
        )
        return self.A <= C * rhs * (1 + 1e-12) + 1e-300

    def to_json(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if not isinstance(v, np.ndarray)}
        d["energy_bound_holds"] = self.energy_bound_holds
        return d


def _safe_ratio(num, den):
    return num / den if den > 0 else (0.0 if num == 0 else math.inf)


def bootstrap_quantities(traj: Trajectory, forcing=None) -> BootstrapReport:
    """Energy growth ``A`` and Morawetz bulk ``B`` of a run, with the norms of
    ``F`` they are compared against.

    ``A`` integrates ``|energy_flux|`` over the monitored steps (trapezoid);
    ``A_variation`` is the total variation of the monitored energy, which
    bounds ``sup E - E(0)`` exactly.  ``a_ratio`` is
    ``A / ((E0 + A)^{1/2} (||F||^3_{L3L6} + |||x|^{1/2}F||_{L2Linf} B^{1/2}))``
    and ``bulk_ratio`` is ``B / (sup||grad_{t,x} v||^2 + sup||grad v|| *
    ||(F+v)^3 - v^3||_{L1L2})``; run families fit one constant to each.
    """
    g = traj.grid
    _require_4d(g)
    forcing = as_forcing(forcing)
    mt = traj.monitor_times
    energies = traj.monitor_array("energy")
    flux = traj.monitor_array("flux")
    A_curve = _cumtrapz(mt, np.abs(flux))
    A = float(A_curve[-1]) if A_curve.size else 0.0
    A_var = float(np.sum(np.abs(np.diff(energies)))) if energies.size > 1 else 0.0
    B_curve = morawetz_bulk(traj, cumulative=True)
    B = float(B_curve[-1]) if len(B_curve) else 0.0
    E0 = float(energies[0])
    sup_e = float(energies.max())

    t = np.asarray(traj.times)
    l6c, wlinf, en_sq, grad_n, nl_l2 = [], [], [], [], []
    rhalf = np.sqrt(g.radius_reg)
    cv = g.cell_volume
    for s in traj.states:
        F = forcing(s.time)
        pos = s.pos.values.real
        p_hat = g.rfft(pos)
        grad2 = g.half_norm_sq(p_hat, g.rkmag ** 2) * cv
        vel2 = float(np.sum(s.vel.values.real ** 2)) * cv
        en_sq.append(grad2 + vel2)
        grad_n.append(math.sqrt(grad2))
        if F is None:
            l6c.append(0.0)
            wlinf.append(0.0)
            nl_l2.append(0.0)
        else:
            F2 = F * F
            l6c.append(math.sqrt(float(np.sum(F2 * F2 * F2)) * cv))
            wlinf.append(float(np.max(np.abs(F) * rhalf)))
            nl_l2.append(math.sqrt(float(np.sum(((F + pos) ** 3 - pos ** 3) ** 2)) * cv))
    if len(t) > 1:
        F3 = float(np.trapezoid(l6c, t))
        W = math.sqrt(float(np.trapezoid(np.square(wlinf), t)))
        NL = float(np.trapezoid(nl_l2, t))
    else:
        F3 = W = NL = 0.0
    en_sup = max(en_sq) if en_sq else 0.0
    grad_sup = max(grad_n) if grad_n else 0.0
    a_den = math.sqrt(E0 + A) * (F3 + W * math.sqrt(B))
    b_den = en_sup + grad_sup * NL
    return BootstrapReport(
        T=float(t[-1] - t[0]) if len(t) else 0.0,
        A=A,
        A_variation=A_var,
        B=B,
        A_curve=A_curve,
        B_curve=np.asarray(B_curve),
        E0=E0,
        sup_energy=sup_e,
        forcing_l3l6=F3 ** (1.0 / 3.0),
        forcing_weighted_l2linf=W,
        energy_norm_sup_sq=en_sup,
        grad_sup=grad_sup,
        nonlinear_l1l2=NL,
        a_ratio=_safe_ratio(A, a_den),
        bulk_ratio=_safe_ratio(B, b_den),
    )


def fit_family_constant(ratios) -> float:
    """Smallest constant making every run's inequality hold: the max ratio."""
    r = [x for x in ratios if np.isfinite(x)]
    return max(r) if r else 0.0
