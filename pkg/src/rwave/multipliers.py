"""Unit-scale partition of unity and dyadic Littlewood-Paley multipliers.

The unit bump is a tensor product ``psi(xi) = prod_i phi(xi_i)`` with
``phi(t) = h(t + 1/2) - h(t - 1/2)`` and ``h`` a smooth step that rises on
``[-w, w]``.  Because ``h(t) + h(-t) = 1`` the translates ``phi(t - j)``
telescope to exactly one, and so do the ``psi(xi - k)`` over ``Z^d``.
``psi`` is supported in the cube ``(-1, 1)^d``, not the unit ball; the two
are not compatible with an exact partition in four dimensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .core_grid import Field, GridSpec

__all__ = [
    "BumpSpec",
    "DEFAULT_BUMP",
    "smooth_step",
    "phi_1d",
    "unit_bump",
    "unit_symbol",
    "unit_project",
    "unit_matrix",
    "LatticeBox",
    "coverage",
    "lp_symbol",
    "dyadic_symbol",
    "dyadic_project",
]


def _bump(u):
    """exp(-1/(1-u^2)) on |u| < 1, zero outside."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True)
class BumpSpec:
    width: float = 0.25
    table_size: int = 2 ** 14

    def __post_init__(self):
        if not 0 < self.width < 0.5:
            raise ValueError("transition width must lie in (0, 1/2)")
        if self.table_size < 16:
            raise ValueError("table_size too small")

    @property
    def support(self) -> float:
        """Half-width of the support of ``phi``."""
        return 0.5 + self.width


DEFAULT_BUMP = BumpSpec()


@lru_cache(maxsize=8)
def _step_table(spec: BumpSpec):
    """Hermite interpolant of h on [0, w] built from exact h and h'."""
    w = spec.width
    # Gauss-Legendre on each panel of [-w, w]
    edges = np.linspace(-w, w, 2 * spec.table_size + 1)
    gx, gw = np.polynomial.legendre.leggauss(12)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * gx + 0.5 * (a + b)
    panel = (0.5 * (b - a) * gw * _bump(nodes / w)).sum(axis=1)
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    total = cum[-1]
    mid = spec.table_size
    t = edges[mid:]
    h = cum[mid:] / total
    h[0] = 0.5
    h[-1] = 1.0
    dh = _bump(t / w) / total
    return CubicHermiteSpline(t, h, dh), total


def smooth_step(t, spec: BumpSpec = DEFAULT_BUMP) -> np.ndarray:
    """Smooth ``h`` with ``h = 0`` below ``-w``, ``1`` above ``w``, ``h(t)+h(-t)=1``."""
    t = np.asarray(t, dtype=float)
    w = spec.width
    spline, _ = _step_table(spec)
    a = np.abs(t)
    inner = np.where(a < w, spline(np.minimum(a, w)), 1.0)
    return np.where(t >= 0, inner, 1.0 - inner)


def phi_1d(t, spec: BumpSpec = DEFAULT_BUMP) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    return smooth_step(t + 0.5, spec) - smooth_step(t - 0.5, spec)


def unit_bump(xi, spec: BumpSpec = DEFAULT_BUMP) -> np.ndarray:
    """``psi(xi)`` for points stacked along the last axis."""
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        xi = xi[None]
    return np.prod(phi_1d(xi, spec), axis=-1)


@dataclass(frozen=True)
class LatticeBox:
    """Integer box ``prod_i [lo_i, hi_i]`` of frequency-lattice points."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo and hi must have the same length")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError("empty lattice box")

    @classmethod
    def cube(cls, dim: int, radius: int) -> "LatticeBox":
        return cls((-radius,) * dim, (radius,) * dim)

    @classmethod
    def for_grid(cls, grid: GridSpec) -> "LatticeBox":
        return cls.cube(grid.dim, grid.max_lattice)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def symmetric(self) -> bool:
        return all(l == -h for l, h in zip(self.lo, self.hi))

    def axis(self, i: int) -> np.ndarray:
        return np.arange(self.lo[i], self.hi[i] + 1)

    def contains(self, k) -> bool:
        return all(l <= int(c) <= h for c, l, h in zip(k, self.lo, self.hi))

    def points(self) -> np.ndarray:
        grids = np.meshgrid(*[self.axis(i) for i in range(self.dim)], indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_json(cls, d) -> "LatticeBox":
        return cls(tuple(int(v) for v in d["lo"]), tuple(int(v) for v in d["hi"]))


def _check_lattice(grid: GridSpec, k) -> tuple[int, ...]:
    k = tuple(int(c) for c in np.atleast_1d(k))
    if len(k) != grid.dim:
        raise ValueError(f"k has {len(k)} components, grid has dim {grid.dim}")
    box = LatticeBox.for_grid(grid)
    if not box.contains(k):
        raise ValueError(
            f"k={k} is outside the representable lattice box "
            f"[{box.lo[0]}, {box.hi[0]}]^{grid.dim} of this grid"
        )
    return k


def unit_matrix(grid: GridSpec, ks: np.ndarray, half: bool = False, spec: BumpSpec = DEFAULT_BUMP):
    """``phi(xi_m - k_j)`` for the grid frequencies of one axis (rows) and ``ks`` (cols)."""
    xi = grid.rfreqs_1d if half else grid.freqs_1d
    return phi_1d(xi[:, None] - np.asarray(ks, dtype=float)[None, :], spec)


def unit_symbol(grid: GridSpec, k, half: bool = False, spec: BumpSpec = DEFAULT_BUMP) -> np.ndarray:
    """``psi(xi - k)`` sampled at every grid frequency."""
    vecs = []
    for ax, kc in enumerate(k):
        xi = grid.rfreqs_1d if (half and ax == grid.dim - 1) else grid.freqs_1d
        vecs.append(phi_1d(xi - kc, spec))
    return grid.outer(vecs)


def unit_project(f: Field, k, spec: BumpSpec = DEFAULT_BUMP) -> Field:
    """``P_k f``; returned in the representation of ``f``."""
    k = _check_lattice(f.grid, k)
    out = Field(f.grid, f.spectral().values * unit_symbol(f.grid, k, spec=spec), "spectral")
    return out if f.rep == "spectral" else out.physical()


def coverage(grid: GridSpec, box: LatticeBox, half: bool = False, spec: BumpSpec = DEFAULT_BUMP):
    """``sum_{k in box} psi(xi - k)``; equals one where the box covers ``xi``."""
    vecs = []
    for ax in range(grid.dim):
        m = unit_matrix(grid, box.axis(ax), half and ax == grid.dim - 1, spec)
        vecs.append(m.sum(axis=1))
    return grid.outer(vecs)


# -- dyadic Littlewood-Paley -------------------------------------------------


def lp_symbol(r, spec: BumpSpec = DEFAULT_BUMP) -> np.ndarray:
    """Radial bump: one on ``|xi| <= 1``, zero for ``|xi| >= 2``."""
    r = np.asarray(r, dtype=float)
    return smooth_step(spec.width * (3.0 - 2.0 * r), spec)


def _check_dyadic(N: float) -> float:
    N = float(N)
    if N <= 0:
        raise ValueError(f"N must be a positive power of two, got {N}")
    e = math.log2(N)
    if abs(e - round(e)) > 1e-12:
        raise ValueError(f"N must be a power of two, got {N}")
    return N


def dyadic_symbol(grid: GridSpec, N: float, mode: str, half: bool = False,
                  spec: BumpSpec = DEFAULT_BUMP) -> np.ndarray:
    N = _check_dyadic(N)
    r = grid.rkmag if half else grid.kmag
    le = lp_symbol(r / N, spec)
    if mode == "le":
        return le
    if mode == "gt":
        return 1.0 - le
    if mode == "at":
        return le - lp_symbol(2.0 * r / N, spec)
    raise ValueError(f"mode must be 'at', 'le' or 'gt', got {mode!r}")


def dyadic_project(f: Field, N: float, mode: str, spec: BumpSpec = DEFAULT_BUMP) -> Field:
    """``P_N``, ``P_{<=N}`` or ``P_{>N}`` (``mode`` = ``'at'``, ``'le'``, ``'gt'``)."""
    sym = dyadic_symbol(f.grid, N, mode, spec=spec)
    out = Field(f.grid, f.spectral().values * sym, "spectral")
    return out if f.rep == "spectral" else out.physical()
