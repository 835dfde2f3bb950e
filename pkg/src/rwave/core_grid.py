"""Periodic grids, unitary spectral transforms and the norms used everywhere else.

The physical box is ``[-L/2, L/2)^d`` with ``L = 2*pi*refine`` and ``n`` points
per axis, so the grid point with index ``n/2`` on every axis is the origin.
Angular frequencies are ``m / refine`` for ``m`` in ``{-n/2, ..., n/2 - 1}``,
which puts the integer lattice ``Z^d`` on the grid whenever ``refine >= 1``.

Spectral arrays use the standard FFT ordering (zero frequency first).  The
transform folds in the shift of the origin, so ``fhat(xi) = N^{-1/2} *
sum_x f(x) exp(-i x.xi)`` with ``x`` the true (centred) coordinates.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "GridSpec",
    "Field",
    "StatePair",
    "make_grid",
    "transform",
    "lp_norm",
    "mixed_norm",
    "time_norm",
    "sobolev_norm",
    "support_radius",
    "no_wrap_horizon",
    "set_threads",
    "get_threads",
    "write_field",
    "read_field",
]

_THREADS = max(1, int(os.environ.get("RWAVE_THREADS", "1")))


def set_threads(n: int) -> None:
    """Set the worker count handed to every FFT call."""
    global _THREADS
    if n < 1:
        raise ValueError("thread count must be >= 1")
    _THREADS = int(n)


def get_threads() -> int:
    return _THREADS


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n_per_axis: int
    refine: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3, 4):
            raise ValueError(f"dim must be in 1..4, got {self.dim}")
        if self.n_per_axis % 2 or self.n_per_axis < 8:
            raise ValueError(f"n_per_axis must be even and >= 8, got {self.n_per_axis}")
        if self.refine < 1:
            raise ValueError(f"refine must be a positive integer, got {self.refine}")

    # -- scalars --------------------------------------------------------
    @property
    def length(self) -> float:
        return 2.0 * math.pi * self.refine

    @property
    def dx(self) -> float:
        return self.length / self.n_per_axis

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.dim

    @property
    def volume(self) -> float:
        return self.length ** self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * self.dim

    @property
    def half_shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * (self.dim - 1) + (self.n_per_axis // 2 + 1,)

    @property
    def size(self) -> int:
        return self.n_per_axis ** self.dim

    @property
    def freq_spacing(self) -> float:
        return 1.0 / self.refine

    @property
    def max_lattice(self) -> int:
        """Largest ``|k_i|`` whose unit cell stays inside the frequency box."""
        return self.n_per_axis // (2 * self.refine) - 1

    # -- 1D axes --------------------------------------------------------
    @cached_property
    def coords_1d(self) -> np.ndarray:
        n = self.n_per_axis
        return (np.arange(n) - n // 2) * self.dx

    @cached_property
    def freq_index_1d(self) -> np.ndarray:
        """Integer frequency index ``m`` per axis, FFT ordering."""
        n = self.n_per_axis
        return np.rint(np.fft.fftfreq(n, 1.0 / n)).astype(np.int64)

    @cached_property
    def freqs_1d(self) -> np.ndarray:
        return self.freq_index_1d / self.refine

    @cached_property
    def rfreqs_1d(self) -> np.ndarray:
        n = self.n_per_axis
        return np.arange(n // 2 + 1) / self.refine

    # -- broadcast helpers ----------------------------------------------
    def axis_view(self, a: np.ndarray, axis: int) -> np.ndarray:
        shape = [1] * self.dim
        shape[axis] = a.shape[0]
        return a.reshape(shape)

    def _freq_axis(self, axis: int, half: bool) -> np.ndarray:
        if half and axis == self.dim - 1:
            return self.rfreqs_1d
        return self.freqs_1d

    def outer(self, vectors: Sequence[np.ndarray]) -> np.ndarray:
        """Outer product of one 1D array per axis (tensor-product symbols)."""
        out = self.axis_view(vectors[0], 0)
        for ax in range(1, self.dim):
            out = out * self.axis_view(vectors[ax], ax)
        return out

    def xi_sq(self, half: bool = False) -> np.ndarray:
        out = 0.0
        for ax in range(self.dim):
            out = out + self.axis_view(self._freq_axis(ax, half) ** 2, ax)
        return np.broadcast_to(out, self.half_shape if half else self.shape)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.xi_sq(False))

    @cached_property
    def rkmag(self) -> np.ndarray:
        return np.sqrt(self.xi_sq(True))

    @cached_property
    def sign(self) -> np.ndarray:
        """(-1)^(m_1+...+m_d): moves the origin from index 0 to index n/2."""
        s = np.where(self.freq_index_1d % 2 == 0, 1.0, -1.0)
        return self.outer([s] * self.dim)

    @cached_property
    def rsign(self) -> np.ndarray:
        s = np.where(self.freq_index_1d % 2 == 0, 1.0, -1.0)
        sh = s[: self.n_per_axis // 2 + 1].copy()
        sh[-1] = (-1.0) ** (self.n_per_axis // 2)
        return self.outer([s] * (self.dim - 1) + [sh])

    @cached_property
    def rweights(self) -> np.ndarray:
        """Multiplicity of each half-spectrum bin in the full spectrum."""
        n = self.n_per_axis
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return self.outer([np.ones(n)] * (self.dim - 1) + [w])

    @cached_property
    def radius(self) -> np.ndarray:
        r2 = 0.0
        for ax in range(self.dim):
            r2 = r2 + self.axis_view(self.coords_1d ** 2, ax)
        return np.sqrt(np.broadcast_to(r2, self.shape))

    @cached_property
    def radius_reg(self) -> np.ndarray:
        """``max(|x|, dx/2)``; keeps ``1/|x|`` weights finite at the origin."""
        return np.maximum(self.radius, 0.5 * self.dx)

    @cached_property
    def radius_sq_index(self) -> np.ndarray:
        """Integer ``sum_i j_i^2`` with ``j`` the offset from the origin index."""
        j = np.arange(self.n_per_axis) - self.n_per_axis // 2
        out = 0
        for ax in range(self.dim):
            out = out + self.axis_view(j * j, ax)
        return np.broadcast_to(out, self.shape)

    def unit_direction(self, axis: int) -> np.ndarray:
        """Component ``x_axis / |x|_reg``; zero at the origin."""
        return self.axis_view(self.coords_1d, axis) / self.radius_reg

    # -- transforms on raw arrays ----------------------------------------
    def fft(self, values: np.ndarray) -> np.ndarray:
        return sfft.fftn(values, norm="ortho", workers=_THREADS) * self.sign

    def ifft(self, spec: np.ndarray) -> np.ndarray:
        return sfft.ifftn(spec * self.sign, norm="ortho", workers=_THREADS)

    def rfft(self, values: np.ndarray) -> np.ndarray:
        return sfft.rfftn(values, norm="ortho", workers=_THREADS) * self.rsign

    def irfft(self, spec: np.ndarray) -> np.ndarray:
        return sfft.irfftn(spec * self.rsign, s=self.shape, norm="ortho", workers=_THREADS)

    def full_from_half(self, half: np.ndarray) -> np.ndarray:
        """Rebuild the full Hermitian spectrum from the rfft half."""
        n = self.n_per_axis
        full = np.empty(self.shape, dtype=complex)
        full[..., : n // 2 + 1] = half
        # conj(fhat(-m)) fills the missing last-axis bins
        idx = [(-np.arange(n)) % n] * (self.dim - 1)
        mirror = half
        for ax, ix in enumerate(idx):
            mirror = np.take(mirror, ix, axis=ax)
        full[..., n // 2 + 1 :] = np.conj(mirror[..., 1 : n // 2][..., ::-1])
        return full

    def half_norm_sq(self, half: np.ndarray, weight: np.ndarray | None = None) -> float:
        """``sum |fhat|^2 * weight`` over the full spectrum, from the half."""
        a = np.abs(half) ** 2
        if weight is not None:
            a = a * weight
        return float(np.sum(a * self.rweights))


def make_grid(dim: int, n_per_axis: int, refine: int = 1) -> GridSpec:
    return GridSpec(int(dim), int(n_per_axis), int(refine))


@dataclass(frozen=True, eq=False)
class Field:
    """Samples on a grid, in physical or spectral representation.

    Values are complex in general; real-valued physical input is kept as
    float64.
    """

    grid: GridSpec
    values: np.ndarray
    rep: str = "physical"

    def __post_init__(self):
        if self.rep not in ("physical", "spectral"):
            raise ValueError(f"rep must be 'physical' or 'spectral', got {self.rep!r}")
        v = np.asarray(self.values)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        # real input stays float64 to halve storage; it is the same field
        v = np.array(v, dtype=float if np.isrealobj(v) else complex)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_real(cls, grid: GridSpec, values) -> "Field":
        return cls(grid, np.asarray(values, dtype=float))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    def physical(self) -> "Field":
        return self if self.rep == "physical" else transform(self, "inverse")

    def spectral(self) -> "Field":
        return self if self.rep == "spectral" else transform(self, "forward")

    @property
    def real(self) -> np.ndarray:
        return self.physical().values.real

    def __add__(self, other: "Field") -> "Field":
        a, b = self.physical(), other.physical()
        return Field(self.grid, a.values + b.values)

    def __sub__(self, other: "Field") -> "Field":
        a, b = self.physical(), other.physical()
        return Field(self.grid, a.values - b.values)

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.values * c, self.rep)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class StatePair:
    """A wave state ``(v, dv/dt)`` at time ``time``; both components real."""

    pos: Field
    vel: Field
    time: float = 0.0

    def __post_init__(self):
        if self.pos.grid != self.vel.grid:
            raise ValueError("pos and vel live on different grids")
        pos, vel = self.pos.physical(), self.vel.physical()
        for name, f in (("pos", pos), ("vel", vel)):
            mag = np.max(np.abs(f.values)) if f.values.size else 0.0
            if np.max(np.abs(f.values.imag)) > 1e-10 * max(mag, 1e-300):
                raise ValueError(f"{name} is not real-valued")
        object.__setattr__(self, "pos", Field(pos.grid, pos.values.real))
        object.__setattr__(self, "vel", Field(vel.grid, vel.values.real))

    @property
    def grid(self) -> GridSpec:
        return self.pos.grid

    @classmethod
    def from_arrays(cls, grid: GridSpec, pos, vel=None, time: float = 0.0) -> "StatePair":
        pos = np.asarray(pos, dtype=float)
        vel = np.zeros(grid.shape) if vel is None else np.asarray(vel, dtype=float)
        return cls(Field(grid, pos), Field(grid, vel), float(time))

    @classmethod
    def zeros(cls, grid: GridSpec, time: float = 0.0) -> "StatePair":
        return cls.from_arrays(grid, np.zeros(grid.shape), None, time)


def transform(f: Field, direction: str) -> Field:
    """Unitary DFT between representations (``'forward'`` or ``'inverse'``)."""
    if direction == "forward":
        if f.rep != "physical":
            raise ValueError("forward transform expects a physical field")
        return Field(f.grid, f.grid.fft(f.values), "spectral")
    if direction == "inverse":
        if f.rep != "spectral":
            raise ValueError("inverse transform expects a spectral field")
        return Field(f.grid, f.grid.ifft(f.values), "physical")
    raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def _lq(values: np.ndarray, q: float, cell_volume: float) -> float:
    a = np.abs(values)
    if math.isinf(q):
        return float(a.max()) if a.size else 0.0
    if q == 2:
        return math.sqrt(float(np.sum(a * a)) * cell_volume)
    return float(np.sum(a ** q) * cell_volume) ** (1.0 / q)


def lp_norm(f: Field, q: float) -> float:
    """Grid L^q norm; ``q = inf`` is the grid maximum."""
    if not q >= 1:
        raise ValueError(f"q must be >= 1, got {q}")
    if f.rep != "physical":
        raise ValueError("lp_norm expects a physical field")
    return _lq(f.values, q, f.grid.cell_volume)


def time_norm(times: Sequence[float], values: Sequence[float], q: float) -> float:
    """Composite-trapezoid L^q norm in time of non-negative samples."""
    t = np.asarray(times, dtype=float)
    v = np.abs(np.asarray(values, dtype=float))
    if t.size < 2:
        raise ValueError("need at least 2 time samples")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    if math.isinf(q):
        return float(v.max())
    return float(np.trapezoid(v ** q, t)) ** (1.0 / q)


def mixed_norm(
    snaps: Iterable[tuple[float, Field]],
    q_t: float,
    r_x: float,
    weight_pow: float = 0.0,
) -> float:
    """``|| |x|^weight_pow u ||_{L^q_t L^r_x}`` over stored snapshots.

    Space uses the grid sum (or max for ``r_x = inf``) with the regularized
    radius; time uses the composite trapezoid rule.
    """
    if weight_pow < 0:
        raise ValueError("weight_pow must be >= 0")
    times, norms = [], []
    weight = None
    for t, f in snaps:
        f = f.physical()
        if weight is None and weight_pow:
            weight = f.grid.radius_reg ** weight_pow
        vals = f.values if weight is None else f.values * weight
        times.append(float(t))
        norms.append(_lq(vals, r_x, f.grid.cell_volume))
    if len(times) < 2:
        raise ValueError("mixed_norm needs at least 2 snapshots")
    if np.any(np.diff(times) <= 0):
        raise ValueError("snapshot times must be strictly increasing")
    return time_norm(times, norms, q_t)


def sobolev_norm(f: Field, s: float, homogeneous: bool = False) -> float:
    """``|| <xi>^s fhat ||`` (or ``|xi|^s`` with the zero mode dropped).

    Normalized so that ``s = 0`` reproduces ``lp_norm(f, 2)``.
    """
    g = f.grid
    spec = f.spectral().values
    a2 = np.abs(spec) ** 2
    if homogeneous:
        if s < 0 and a2.flat[0] > 0:
            import warnings

            warnings.warn(
                "homogeneous Sobolev norm with s < 0 of a field with nonzero mean; "
                "zero mode dropped",
                RuntimeWarning,
                stacklevel=2,
            )
        xi2 = g.xi_sq()
        w = np.zeros(g.shape)
        nz = xi2 > 0
        w[nz] = xi2[nz] ** s
    else:
        w = (1.0 + g.xi_sq()) ** s
    return math.sqrt(float(np.sum(a2 * w)) * g.cell_volume)


def support_radius(values: np.ndarray, grid: GridSpec, tol: float = 1e-8) -> float:
    """Smallest radius outside which ``|values| <= tol * max|values|``."""
    a = np.abs(np.asarray(values))
    peak = a.max()
    if peak == 0:
        return 0.0
    outside = a > tol * peak
    return float(grid.radius[outside].max()) + 0.0


def no_wrap_horizon(grid: GridSpec, data_radius: float) -> float:
    """Unit-speed time before a front leaving ``data_radius`` reaches the box edge."""
    return 0.5 * grid.length - data_radius


# -- binary snapshots ------------------------------------------------------

_MAGIC = b"RWF1"


def write_field(path, f: Field) -> None:
    g = f.grid
    header = _MAGIC + struct.pack("<4i", g.dim, g.n_per_axis, g.refine, 0 if f.rep == "physical" else 1)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes(order="C"))


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"not an RWF1 snapshot (magic {magic!r})")
        dim, n, refine, rep = struct.unpack("<4i", fh.read(16))
        grid = make_grid(dim, n, refine)
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != grid.size:
        raise ValueError(f"payload has {data.size} values, expected {grid.size}")
    return Field(grid, data.reshape(grid.shape), "physical" if rep == 0 else "spectral")
