"""Conjugate-symmetric Gaussian coefficients and the unit-scale randomization.

Coefficients are generated by a stateless counter-based generator
(Philox4x32-10) keyed by the seed, with the counter built from the lattice
point ``k``, the sample index and a stream id.  Any single ``g_k`` can be
recomputed on its own, and Monte Carlo statistics do not depend on the
order in which samples are evaluated.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core_grid import Field, GridSpec
from .multipliers import DEFAULT_BUMP, BumpSpec, LatticeBox, coverage, unit_matrix

__all__ = [
    "philox4x32",
    "uniforms",
    "CoeffSet",
    "sample_coeffs",
    "positive_half",
    "random_symbol",
    "randomize",
    "DISTRIBUTIONS",
]

log = logging.getLogger(__name__)

_M0, _M1 = np.uint64(0xD2511F53), np.uint64(0xCD9E8D57)
_W0, _W1 = np.uint64(0x9E3779B9), np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SH = np.uint64(32)


def philox4x32(counter, key, rounds: int = 10) -> np.ndarray:
    """Vectorized Philox4x32.

    ``counter`` has shape ``(..., 4)`` and ``key`` shape ``(2,)`` or
    ``(..., 2)``, all 32-bit words; returns ``(..., 4)`` uint32 words.
    """
    c = np.asarray(counter, dtype=np.uint64) & _MASK
    k = np.broadcast_to(np.asarray(key, dtype=np.uint64) & _MASK, c.shape[:-1] + (2,))
    c0, c1, c2, c3 = (c[..., i].copy() for i in range(4))
    k0, k1 = k[..., 0].copy(), k[..., 1].copy()
    for r in range(rounds):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SH, p0 & _MASK
        hi1, lo1 = p1 >> _SH, p1 & _MASK
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
        if r + 1 < rounds:
            k0 = (k0 + _W0) & _MASK
            k1 = (k1 + _W1) & _MASK
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def _key(seed: int) -> np.ndarray:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.array([seed & 0xFFFFFFFF, seed >> 32], dtype=np.uint64)


def uniforms(seed: int, counters) -> tuple[np.ndarray, np.ndarray]:
    """Two independent uniforms in ``[0, 1)`` (53-bit) per counter."""
    w = philox4x32(counters, _key(seed)).astype(np.uint64)
    scale = 1.0 / 9007199254740992.0
    u1 = ((w[..., 0] >> np.uint64(5)) * 67108864 + (w[..., 1] >> np.uint64(6))) * scale
    u2 = ((w[..., 2] >> np.uint64(5)) * 67108864 + (w[..., 3] >> np.uint64(6))) * scale
    return u1.astype(float), u2.astype(float)


def _gaussian_pair(u1, u2):
    r = np.sqrt(-2.0 * np.log1p(-u1))
    th = 2.0 * math.pi * u2
    return r * np.cos(th), r * np.sin(th)


# maps two uniforms to two independent zero-mean, unit-variance reals
DISTRIBUTIONS = {"gaussian": _gaussian_pair}

_OFFSET = 1 << 15


def _encode(points: np.ndarray) -> np.ndarray:
    """Pack lattice points (|k_i| < 2^15, up to 4 axes) into two 32-bit words."""
    p = np.asarray(points, dtype=np.int64) + _OFFSET
    if np.any(p < 0) or np.any(p >= 1 << 16):
        raise ValueError("lattice coordinates must satisfy |k_i| < 2^15")
    d = p.shape[-1]
    p = np.concatenate([p, np.zeros(p.shape[:-1] + (4 - d,), dtype=np.int64)], axis=-1)
    w0 = (p[..., 0] << 16) | p[..., 1]
    w1 = (p[..., 2] << 16) | p[..., 3]
    return np.stack([w0, w1], axis=-1)


def positive_half(points: np.ndarray) -> np.ndarray:
    """Mask of lexicographically positive points (first nonzero coordinate > 0)."""
    points = np.asarray(points)
    out = np.zeros(points.shape[0], dtype=bool)
    decided = np.zeros(points.shape[0], dtype=bool)
    for i in range(points.shape[1]):
        c = points[:, i]
        out |= ~decided & (c > 0)
        decided |= c != 0
    return out


def _draw(seed: int, points: np.ndarray, sample: int, stream: int, distribution: str):
    enc = _encode(points)
    ctr = np.empty(points.shape[:-1] + (4,), dtype=np.uint64)
    ctr[..., 0] = enc[..., 0]
    ctr[..., 1] = enc[..., 1]
    ctr[..., 2] = int(sample) & 0xFFFFFFFF
    ctr[..., 3] = int(stream) & 0xFFFFFFFF
    u1, u2 = uniforms(seed, ctr)
    return DISTRIBUTIONS[distribution](u1, u2)


@dataclass(frozen=True, eq=False)
class CoeffSet:
    """Coefficients ``g_k`` on a symmetric lattice box, ``g_{-k} = conj(g_k)``."""

    box: LatticeBox
    coeffs: np.ndarray
    seed: int | None = None
    sample: int = 0
    stream: int = 0
    index_rule: str = "lexicographic"
    distribution: str = "gaussian"

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape != self.box.shape:
            raise ValueError(f"coefficient array {c.shape} does not match box {self.box.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def __getitem__(self, k) -> complex:
        idx = tuple(int(kc) - lo for kc, lo in zip(k, self.box.lo))
        return complex(self.coeffs[idx])

    @classmethod
    def constant(cls, box: LatticeBox, value: complex = 1.0) -> "CoeffSet":
        """Deterministic override (every ``g_k`` equal to ``value``)."""
        return cls(box, np.full(box.shape, value, dtype=complex), seed=None)

    def to_json(self) -> str:
        pts = self.box.points()
        vals = self.coeffs.ravel()
        return json.dumps(
            {
                "box": self.box.to_json(),
                "seed": self.seed,
                "sample": self.sample,
                "stream": self.stream,
                "index_rule": self.index_rule,
                "distribution": self.distribution,
                "coeffs": [[p.tolist(), [v.real, v.imag]] for p, v in zip(pts, vals)],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CoeffSet":
        d = json.loads(text)
        box = LatticeBox.from_json(d["box"])
        c = np.zeros(box.shape, dtype=complex)
        for k, (re, im) in d["coeffs"]:
            c[tuple(kc - lo for kc, lo in zip(k, box.lo))] = complex(re, im)
        return cls(box, c, d["seed"], d["sample"], d["stream"], d["index_rule"], d["distribution"])


def sample_coeffs(
    seed: int,
    box: LatticeBox,
    sample: int = 0,
    stream: int = 0,
    distribution: str = "gaussian",
) -> CoeffSet:
    """Draw ``g_k`` on ``box``: ``E|g_k|^2 = 1``, ``g_0`` real, ``g_{-k} = conj(g_k)``.

    ``stream`` separates independent families drawn for the same sample
    (0 for the position data, 1 for the velocity data).
    """
    if not box.symmetric:
        raise ValueError(f"lattice box must be symmetric under negation, got lo={box.lo} hi={box.hi}")
    if distribution not in DISTRIBUTIONS:
        raise ValueError(f"unknown distribution {distribution!r}")
    pts = box.points()
    pos = positive_half(pts)
    re, im = _draw(seed, pts[pos], sample, stream, distribution)
    flat = np.zeros(pts.shape[0], dtype=complex)
    flat[pos] = (re + 1j * im) / math.sqrt(2.0)
    # -k sits at the mirrored flat index in a symmetric box
    flat[::-1][pos] = np.conj(flat[pos])
    zero = np.all(pts == 0, axis=1)
    z_re, _ = _draw(seed, pts[zero], sample, stream, distribution)
    flat[zero] = z_re
    return CoeffSet(box, flat.reshape(box.shape), int(seed), int(sample), int(stream), "lexicographic", distribution)


def random_symbol(grid: GridSpec, c: CoeffSet, half: bool = False,
                  spec: BumpSpec = DEFAULT_BUMP) -> np.ndarray:
    """``sum_k g_k psi(xi - k)`` at every grid frequency.

    Uses the tensor-product structure: one small matrix contraction per axis.
    """
    box = c.box
    if box.dim != grid.dim:
        raise ValueError(f"box dimension {box.dim} does not match grid dimension {grid.dim}")
    out = c.coeffs
    for ax in range(grid.dim):
        m = unit_matrix(grid, box.axis(ax), half and ax == grid.dim - 1, spec)
        out = np.tensordot(m, out, axes=([1], [ax]))
        out = np.moveaxis(out, 0, ax)
    return out


def _check_box(grid: GridSpec, box: LatticeBox):
    admissible = LatticeBox.for_grid(grid)
    if box.dim != grid.dim or not all(
        al <= l and h <= ah for l, h, al, ah in zip(box.lo, box.hi, admissible.lo, admissible.hi)
    ):
        raise ValueError(
            f"lattice box lo={box.lo} hi={box.hi} does not fit the grid's admissible box "
            f"[{admissible.lo[0]}, {admissible.hi[0]}]^{grid.dim}"
        )


def randomize(f: Field, c: CoeffSet, keep_complex: bool = False,
              spec: BumpSpec = DEFAULT_BUMP) -> Field:
    """``sum_k g_k P_k f`` for real ``f``.

    The imaginary round-off is logged and dropped unless ``keep_complex``.
    Spectral content of ``f`` outside the box's coverage is lost; a warning
    is raised when that content exceeds ``1e-10`` of ``||f||``.
    """
    g = f.grid
    _check_box(g, c.box)
    phys = f.physical().values
    if np.max(np.abs(phys.imag)) > 1e-10 * max(np.max(np.abs(phys)), 1e-300):
        raise ValueError("randomize expects a real-valued field")
    spec_f = f.spectral().values
    cov = coverage(g, c.box, spec=spec)
    lost = np.sqrt(np.sum(np.abs(spec_f * (1.0 - cov)) ** 2))
    total = np.sqrt(np.sum(np.abs(spec_f) ** 2))
    if total > 0 and lost > 1e-10 * total:
        warnings.warn(
            f"randomize: {lost / total:.2e} of ||f|| lies outside the lattice box coverage",
            RuntimeWarning,
            stacklevel=2,
        )
    out = g.ifft(spec_f * random_symbol(g, c, spec=spec))
    if keep_complex:
        return Field(g, out)
    residue = float(np.max(np.abs(out.imag))) if out.size else 0.0
    log.debug("randomize: discarded imaginary residue %.3e", residue)
    return Field(g, out.real)
