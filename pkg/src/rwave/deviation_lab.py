"""Monte Carlo and deterministic probes of the probabilistic and harmonic
analysis estimates: Khintchine moments, sub-Gaussian tails of randomized
free evolutions, frequency-localized Strichartz ratios and the radial
square-function bound.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, j1
from scipy.stats import linregress

from .core_grid import Field, GridSpec, get_threads, no_wrap_horizon, sobolev_norm, support_radius
from .multipliers import LatticeBox, dyadic_symbol, phi_1d, unit_project
from .propagator import free_multipliers
from .randomizer import _gaussian_pair, random_symbol, sample_coeffs, uniforms

__all__ = [
    "admissible",
    "radial_admissible",
    "khintchine_ratio",
    "khintchine_oracle",
    "FUNCTIONALS",
    "MCResult",
    "mc_functional",
    "TailCurve",
    "tail_estimate",
    "strichartz_ratio",
    "loglog_slope",
    "square_function",
    "square_function_ratio",
    "radial_deviation",
    "radial_shell",
]

_KHINTCHINE_STREAM = 7


# -- exponent pairs ----------------------------------------------------------------


def admissible(q: float, r: float) -> str:
    """``'sharp'``, ``'admissible'`` or ``'not'`` for ``1/q + 3/(2r) <= 3/4``."""
    if not (q >= 2 and 2 <= r < math.inf):
        return "not"
    lhs = 1.0 / q + 1.5 / r
    if math.isclose(lhs, 0.75, rel_tol=0, abs_tol=1e-12):
        return "sharp"
    return "admissible" if lhs < 0.75 else "not"


def radial_admissible(q: float, r: float) -> bool:
    """``1/q + 3/r < 3/2`` (with ``q >= 2``, ``2 <= r < inf``)."""
    if not (q >= 2 and 2 <= r < math.inf):
        return False
    return 1.0 / q + 3.0 / r < 1.5 - 1e-12


# -- Khintchine ---------------------------------------------------------------------


def khintchine_oracle(p: float) -> float:
    """Exact ``(E|sum c_n g_n|^p)^{1/p} / (sqrt(p) ||c||)`` for unit-variance
    complex Gaussians: ``Gamma(1 + p/2)^{1/p} / sqrt(p)``."""
    return math.exp(gammaln(1.0 + 0.5 * p) / p) / math.sqrt(p)


def _complex_gaussians(seed: int, n_coeffs: int, samples: np.ndarray) -> np.ndarray:
    """``(samples, n_coeffs)`` complex Gaussians with ``E|g|^2 = 1``."""
    ctr = np.zeros((samples.size, n_coeffs, 4), dtype=np.uint64)
    ctr[..., 0] = np.arange(n_coeffs)[None, :]
    ctr[..., 2] = samples[:, None]
    ctr[..., 3] = _KHINTCHINE_STREAM
    u1, u2 = uniforms(seed, ctr)
    z1, z2 = _gaussian_pair(u1, u2)
    return (z1 + 1j * z2) / math.sqrt(2.0)


def khintchine_ratio(c, p: float, n_samples: int, seed: int, chunk: int = 4096) -> float:
    """``(mean |sum c_n g_n|^p)^{1/p} / (sqrt(p) ||c||_2)`` over ``n_samples``."""
    if p < 2:
        raise ValueError(f"p must be >= 2, got {p}")
    c = np.asarray(c, dtype=complex).ravel()
    norm = float(np.linalg.norm(c))
    if not norm > 0:
        raise ValueError("coefficient vector must be nonzero")
    acc = 0.0
    for start in range(0, n_samples, chunk):
        idx = np.arange(start, min(start + chunk, n_samples), dtype=np.uint64)
        s = _complex_gaussians(seed, c.size, idx) @ c
        acc += float(np.sum(np.abs(s) ** p))
    return (acc / n_samples) ** (1.0 / p) / (math.sqrt(p) * norm)


# -- Monte Carlo functionals ----------------------------------------------------------

FUNCTIONALS = ("l3l6_free", "weighted_l2linf_free", "hs_norm")


@dataclass
class MCResult:
    functional_id: str
    samples: np.ndarray
    seed: int
    threshold: float
    T: float
    dt: float
    grid: tuple
    sample_offset: int = 0

    def manifest(self) -> dict:
        return {
            "functional": self.functional_id,
            "n_samples": int(self.samples.size),
            "seed": self.seed,
            "threshold": self.threshold,
            "T": self.T,
            "dt": self.dt,
            "grid": list(self.grid),
            "sample_offset": self.sample_offset,
            "mean": float(np.mean(self.samples)) if self.samples.size else None,
            "std": float(np.std(self.samples)) if self.samples.size else None,
        }


class _Sampler:
    """Evaluates every requested functional for one sample index."""

    def __init__(self, f0: Field, f1: Field | None, functionals, seed, T, dt, threshold, s):
        g = f0.grid
        self.g = g
        self.functionals = functionals
        self.seed = int(seed)
        self.box = LatticeBox.for_grid(g)
        self.s = s
        self.f0_hat = g.rfft(f0.physical().values.real)
        self.f1_hat = None if f1 is None else g.rfft(f1.physical().values.real)
        self.hp = dyadic_symbol(g, threshold, "gt", half=True)
        self.times = None
        if any(f != "hs_norm" for f in functionals):
            n = max(1, int(math.ceil(T / dt - 1e-9)))
            self.times = np.linspace(0.0, T, n + 1)
            self.mults = [free_multipliers(g.rkmag, t)[:2] for t in self.times]
        if "weighted_l2linf_free" in functionals:
            self.rhalf = np.sqrt(g.radius_reg)
        self.hs_weight = (1.0 + g.rkmag ** 2) ** s

    def __call__(self, i: int) -> dict:
        g = self.g
        out = {}
        c0 = sample_coeffs(self.seed, self.box, sample=i, stream=0)
        a = random_symbol(g, c0, half=True) * self.f0_hat
        b = None
        if self.f1_hat is not None:
            c1 = sample_coeffs(self.seed, self.box, sample=i, stream=1)
            b = random_symbol(g, c1, half=True) * self.f1_hat
        if "hs_norm" in self.functionals:
            out["hs_norm"] = g.cell_volume * g.half_norm_sq(a, self.hs_weight)
        if self.times is None:
            return out
        a = a * self.hp
        if b is not None:
            b = b * self.hp
        l6, wl = [], []
        for cos_t, sinc_t in self.mults:
            spec = cos_t * a if b is None else cos_t * a + sinc_t * b
            u = g.irfft(spec)
            if "l3l6_free" in self.functionals:
                u2 = u * u
                l6.append(math.sqrt(float(np.sum(u2 * u2 * u2)) * g.cell_volume))
            if "weighted_l2linf_free" in self.functionals:
                wl.append(float(np.max(np.abs(u) * self.rhalf)))
        if l6:
            out["l3l6_free"] = float(np.trapezoid(l6, self.times)) ** (1.0 / 3.0)
        if wl:
            out["weighted_l2linf_free"] = math.sqrt(float(np.trapezoid(np.square(wl), self.times)))
        return out


def mc_functional(
    f0: Field,
    f1: Field | None,
    functional,
    n_samples: int,
    seed: int,
    T: float | None = None,
    dt: float | None = None,
    *,
    threshold: float = 1,
    s: float = 0.0,
    sample_offset: int = 0,
    threads: int | None = None,
    data_radius: float | None = None,
    progress=None,
):
    """Sample a functional of the randomized data ``(f0^w, f1^w)``.

    For each index ``i`` the coefficients are drawn from ``(seed, i)`` with
    stream 0 for ``f0`` and stream 1 for ``f1``, so each sample is
    reproducible on its own.  ``l3l6_free`` and ``weighted_l2linf_free``
    evolve ``P_{>threshold}`` of the data freely on ``[0, T]`` (trapezoid
    in time with step ``dt``); ``hs_norm`` is ``||f0^w||_{H^s}^2`` of the
    un-filtered data.  ``T`` defaults to the no-wrap horizon of the support
    of ``f0, f1``.  ``functional`` may be a single name (returns one
    :class:`MCResult`) or a sequence (returns a dict of them).
    """
    single = isinstance(functional, str)
    names = (functional,) if single else tuple(functional)
    for name in names:
        if name not in FUNCTIONALS:
            raise ValueError(f"unknown functional {name!r}; choose from {FUNCTIONALS}")
    g = f0.grid
    if "weighted_l2linf_free" in names and g.dim != 4:
        raise ValueError("the weighted functional is defined for d = 4")
    if threshold not in (1, 4):
        raise ValueError("threshold must be 1 or 4")
    if data_radius is None:
        vals = [f0.physical().values]
        if f1 is not None:
            vals.append(f1.physical().values)
        data_radius = max(support_radius(v, g) for v in vals)
    horizon = no_wrap_horizon(g, data_radius)
    if T is None:
        T = horizon
    if T > horizon + 1e-12:
        raise ValueError(f"T={T:g} exceeds the no-wrap horizon {horizon:g} (data radius {data_radius:g})")
    if dt is None:
        dt = T / 8 if T > 0 else 1.0
    sampler = _Sampler(f0, f1, names, seed, T, dt, threshold, s)
    idx = range(sample_offset, sample_offset + n_samples)
    threads = threads or get_threads()
    results = [None] * n_samples
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            for j, res in enumerate(ex.map(sampler, idx)):
                results[j] = res
                if progress:
                    progress(j)
    else:
        for j, i in enumerate(idx):
            results[j] = sampler(i)
            if progress:
                progress(j)
    out = {
        name: MCResult(name, np.array([r[name] for r in results], dtype=float), int(seed),
                       threshold, float(T), float(dt), (g.dim, g.n_per_axis, g.refine), sample_offset)
        for name in names
    }
    return out[names[0]] if single else out


# -- tails ----------------------------------------------------------------------------


@dataclass
class TailCurve:
    """Empirical exceedance curve ``P(X > lambda)`` and its ``lambda^2`` fit."""

    lambdas: np.ndarray
    counts: np.ndarray
    empirical_log_tail: np.ndarray
    n_samples: int
    functional_id: str
    fit: tuple  # (slope in lambda^2, r_squared)
    intercept: float = math.nan
    qualified: np.ndarray = field(default=None, repr=False)
    degenerate: bool = False
    min_exceed: int = 30

    @property
    def slope(self) -> float:
        return self.fit[0]

    @property
    def r_squared(self) -> float:
        return self.fit[1]

    def is_monotone(self) -> bool:
        lt = self.empirical_log_tail
        finite = np.isfinite(lt)
        return bool(np.all(np.diff(self.counts) <= 0) and np.all(np.diff(lt[finite]) <= 1e-15))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "count", "log_tail"])
            for lam, c, lt in zip(self.lambdas, self.counts, self.empirical_log_tail):
                w.writerow([repr(float(lam)), int(c), repr(float(lt))])

    def to_json(self) -> dict:
        return {
            "functional": self.functional_id,
            "n_samples": self.n_samples,
            "slope": self.fit[0],
            "r_squared": self.fit[1],
            "intercept": self.intercept,
            "degenerate": self.degenerate,
            "qualified_bins": int(np.sum(self.qualified)) if self.qualified is not None else 0,
        }


def default_lambda_grid(samples: np.ndarray, min_exceed: int = 30, n: int = 40) -> np.ndarray:
    """From the median up to the level still exceeded by ``min_exceed`` samples."""
    x = np.sort(np.asarray(samples, dtype=float))
    lo = float(np.median(x))
    hi = float(x[max(0, x.size - min_exceed - 1)])
    if hi <= lo:
        hi = float(x[-1])
    return np.linspace(lo, hi, n)


def tail_estimate(samples, lambda_grid=None, functional_id: str = "samples",
                  min_exceed: int = 30) -> TailCurve:
    """Exceedance counts on ``lambda_grid`` and a least-squares fit of
    ``log P(X > lambda)`` against ``lambda^2`` on bins with at least
    ``min_exceed`` exceedances."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 1000:
        raise ValueError(f"tail_estimate needs at least 1000 samples, got {x.size}")
    if np.ptp(x) == 0:
        lam = np.array([x[0]])
        return TailCurve(lam, np.array([0]), np.array([-math.inf]), x.size, functional_id,
                         (math.nan, math.nan), qualified=np.array([False]), degenerate=True,
                         min_exceed=min_exceed)
    lam = default_lambda_grid(x, min_exceed) if lambda_grid is None else np.asarray(lambda_grid, float)
    if np.any(np.diff(lam) <= 0):
        raise ValueError("lambda grid must be strictly increasing")
    xs = np.sort(x)
    counts = x.size - np.searchsorted(xs, lam, side="right")
    with np.errstate(divide="ignore"):
        log_tail = np.log(counts / x.size)
    ok = counts >= min_exceed
    slope = r2 = intercept = math.nan
    if np.sum(ok) >= 3:
        res = linregress(lam[ok] ** 2, log_tail[ok])
        slope, intercept, r2 = float(res.slope), float(res.intercept), float(res.rvalue ** 2)
    return TailCurve(lam, counts, log_tail, x.size, functional_id, (slope, r2), intercept, ok,
                     False, min_exceed)


# -- Strichartz ratio ---------------------------------------------------------------


def strichartz_ratio(f: Field, k, q: float, r: float, T: float, dt: float,
                     sign: int = 1) -> float:
    """``||exp(+-it|D|) P_k f||_{L^q L^r([0,T])} / || |D|^{1/q} P_k f ||_{L^2}``.

    Returns ``nan`` when ``P_k f = 0``.  Time uses the trapezoid rule with
    step ``dt`` (shrunk to land on ``T``).
    """
    cls = admissible(q, r)
    if cls == "not":
        raise ValueError(
            f"(q, r) = ({q}, {r}) is not admissible: need q >= 2, 2 <= r < inf and "
            f"1/q + 3/(2r) = {1.0 / q + 1.5 / r:.6g} <= 3/4"
        )
    if T <= 0 or dt <= 0:
        raise ValueError("T and dt must be positive")
    kk = np.atleast_1d(np.asarray(k, dtype=float))
    if float(np.linalg.norm(kk)) <= 4:
        warnings.warn(f"|k| = {np.linalg.norm(kk):.3g} <= 4 is below the estimate's range",
                      RuntimeWarning, stacklevel=2)
    g = f.grid
    pk = unit_project(f, k).spectral().values
    rhs = math.sqrt(float(np.sum(np.abs(pk) ** 2 * g.kmag ** (2.0 / q))) * g.cell_volume)
    if rhs == 0:
        return math.nan
    n = max(1, int(math.ceil(T / dt - 1e-9)))
    times = np.linspace(0.0, T, n + 1)
    norms = []
    for t in times:
        u = g.ifft(pk * np.exp(1j * sign * t * g.kmag))
        norms.append(float(np.sum(np.abs(u) ** r) * g.cell_volume) ** (1.0 / r))
    lhs = float(np.trapezoid(np.asarray(norms) ** q, times)) ** (1.0 / q)
    return lhs / rhs


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(linregress(np.log(x), np.log(y)).slope)


# -- square function ----------------------------------------------------------------


def _offsets(P: int) -> np.ndarray:
    return np.arange(-(P - 1), P) if P > 1 else np.array([0])


def square_function(f: Field) -> np.ndarray:
    """``(sum_k |P_k f(x)|^2)^{1/2}`` on the grid, ``k`` over the admissible box.

    On a grid with refinement ``P`` the frequencies in ``supp psi(. - k)``
    are ``k + j/P`` with ``|j_i| < P``, so ``P_k f(x) = e^{ik.x} sum_j
    A_j[k] e^{ij.x/P}`` and the sum over ``k`` only needs the Gram matrix
    ``sum_k A_j[k] conj(A_j'[k])``.  The result is a trigonometric
    polynomial with frequencies ``(j - j')/P``.
    """
    g = f.grid
    P, n, d = g.refine, g.n_per_axis, g.dim
    box = LatticeBox.for_grid(g)
    spec = f.spectral().values
    offs = _offsets(P)
    w1 = phi_1d(offs / P)
    ks = box.axis(0)
    combos = np.array(np.meshgrid(*([offs] * d), indexing="ij")).reshape(d, -1).T
    # A[j] = psi-weight(j) * fhat(P k + j) over all k in the box
    blocks = []
    for j in combos:
        idx = np.ix_(*[(P * ks + jj) % n for jj in j])
        blocks.append(np.prod(w1[j + P - 1]) * spec[idx].ravel())
    A = np.array(blocks)
    G = A @ A.conj().T
    # sum the Gram entries along each difference j - j'
    m = 4 * P - 3
    S = np.zeros((m,) * d, dtype=complex)
    diff = combos[:, None, :] - combos[None, :, :] + (2 * P - 2)
    np.add.at(S, tuple(diff[..., i] for i in range(d)), G)
    deltas = np.arange(-(2 * P - 2), 2 * P - 1)
    x = g.coords_1d
    E = np.exp(1j * np.outer(x, deltas) / P)
    out = S
    for ax in range(d):
        out = np.moveaxis(np.tensordot(E, out, axes=([1], [ax])), 0, ax)
    return np.sqrt(np.maximum(out.real / g.size, 0.0))


def radial_deviation(values: np.ndarray, grid: GridSpec) -> float:
    """``max |f - radial average of f|`` relative to ``max |f|``.

    Grid points are grouped by their exact squared distance to the origin.
    """
    v = np.asarray(values)
    peak = float(np.max(np.abs(v)))
    if peak == 0:
        return 0.0
    key = np.asarray(grid.radius_sq_index).ravel()
    _, inv = np.unique(key, return_inverse=True)
    flat = v.ravel()
    cnt = np.bincount(inv)
    avg = np.bincount(inv, weights=flat.real) / cnt
    dev = np.abs(flat.real - avg[inv])
    if np.iscomplexobj(flat):
        avg_i = np.bincount(inv, weights=flat.imag) / cnt
        dev = np.hypot(dev, flat.imag - avg_i[inv])
    return float(dev.max()) / peak


def square_function_ratio(f: Field, s: float, radial_tol: float = 1e-8) -> float:
    """``sup_x |x|^{3/2} (sum_k |P_k f(x)|^2)^{1/2} / ||f||_{H^s}`` for radial ``f``.

    Returns ``nan`` for ``f = 0``.
    """
    g = f.grid
    if g.dim != 4:
        raise ValueError(f"the square-function bound is stated for d = 4, got d = {g.dim}")
    phys = f.physical().values
    dev = radial_deviation(phys, g)
    if dev > radial_tol:
        raise ValueError(f"input is not radial: deviation from its radial average is {dev:.3e} > {radial_tol:g}")
    den = sobolev_norm(f, s)
    if den == 0:
        return math.nan
    sf = square_function(f)
    return float(np.max(g.radius_reg ** 1.5 * sf)) / den


def radial_shell(grid: GridSpec, rho0: float, width: float, nodes: int = 400) -> Field:
    """Radial field whose 4d Fourier transform is ``exp(-((|xi| - rho0)/width)^2)``.

    Evaluated pointwise by the Hankel inversion
    ``f(r) = (2 pi)^{-2} r^{-1} int fhat(rho) J1(r rho) rho^2 drho``,
    once per distinct radius, so the samples are exactly radial.
    """
    if grid.dim != 4:
        raise ValueError("radial_shell builds 4d fields")
    lo = max(0.0, rho0 - 7.0 * width)
    hi = rho0 + 7.0 * width
    x, w = np.polynomial.legendre.leggauss(nodes)
    rho = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * w * np.exp(-(((rho - rho0) / width) ** 2))
    key = np.asarray(grid.radius_sq_index)
    uniq, inv = np.unique(key.ravel(), return_inverse=True)
    r = np.sqrt(uniq.astype(float)) * grid.dx
    vals = np.empty(r.size)
    zero = r == 0
    vals[zero] = np.sum(w * rho ** 3) / 2.0
    rz = r[~zero]
    vals[~zero] = (j1(np.outer(rz, rho)) @ (w * rho ** 2)) / rz
    vals /= (2.0 * math.pi) ** 2
    return Field(grid, vals[inv].reshape(grid.shape))
