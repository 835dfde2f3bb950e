"""Quick invariant suite behind ``rwave verify``.

Each check runs in seconds on the default 16^4 grid and reports a
pass/fail flag with the measured quantity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_grid import Field, StatePair, make_grid


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _order(errs) -> float:
    errs = np.asarray(errs)
    return float(np.min(np.log2(errs[:-1] / errs[1:])))


def check_partition_of_unity(g):
    from .multipliers import LatticeBox, coverage

    # one lattice layer beyond the admissible box reaches every grid frequency
    cov = coverage(g, LatticeBox.cube(g.dim, g.max_lattice + 1))
    err = float(np.max(np.abs(cov - 1.0)))
    return CheckResult("partition of unity", err <= 1e-12, f"max |sum psi - 1| = {err:.2e}")


def check_randomizer_identity(g, seed):
    from .multipliers import LatticeBox, dyadic_project
    from .randomizer import CoeffSet, randomize

    rng = np.random.default_rng(seed)
    box = LatticeBox.for_grid(g)
    f = Field(g, np.exp(-g.radius ** 2) * (1 + 0.1 * rng.standard_normal(g.shape)))
    # band-limit f to |xi| < 2 so the box covers all of it
    f = dyadic_project(f, 1, "le")
    one = randomize(f, CoeffSet.constant(box, 1.0))
    zero = randomize(f, CoeffSet.constant(box, 0.0))
    err = float(np.max(np.abs(one.values - f.values)) / np.max(np.abs(f.values)))
    ok = err <= 1e-12 and not np.any(zero.values)
    return CheckResult("randomizer identity", ok, f"rel err (g = 1) {err:.2e}")


def check_free_flow(g):
    from .propagator import free_evolve, linear_energy

    u = StatePair.from_arrays(g, np.exp(-g.radius ** 2), np.exp(-(g.radius / 0.8) ** 2))
    a = free_evolve(free_evolve(u, 0.7), 1.1)
    b = free_evolve(u, 1.8)
    gl = float(np.max(np.abs(a.pos.values - b.pos.values)))
    e0, e1 = linear_energy(u), linear_energy(b)
    de = abs(e1 - e0) / e0
    return CheckResult("free flow group law", gl <= 1e-10 and de <= 1e-10, f"group {gl:.1e}, energy {de:.1e}")


def _data(g, amp=1.0):
    return StatePair.from_arrays(g, amp * np.exp(-(g.radius / 1.2) ** 2), None)


def _band_limited(g):
    """A Gaussian restricted to ``|xi| < 2``, inside every admissible box."""
    from .multipliers import dyadic_project

    return dyadic_project(Field(g, np.exp(-(g.radius / 1.2) ** 2)), 1, "le")


def check_energy_order(g):
    from .nlw_solver import solve

    u = _data(g)
    errs = []
    for dt in (0.2, 0.1, 0.05):
        E = solve(u, None, T=1.0, dt=dt, check_horizon=False).monitor_array("energy")
        errs.append(abs(E[-1] - E[0]) / E[0])
    p = _order(errs)
    return CheckResult("unforced energy order", p >= 1.9, f"order {p:.2f}, drift {errs[-1]:.1e}")


def check_flux_identity(g, seed):
    from .data import randomized_split
    from .nlw_solver import scale_forcing, solve

    f = _band_limited(g)
    init, forcing = randomized_split(f, None, seed)
    forcing = scale_forcing(forcing, 0.5)
    errs = []
    for dt in (0.2, 0.1, 0.05):
        tr = solve(init, forcing, T=1.0, dt=dt, check_horizon=False)
        E, fl, t = tr.monitor_array("energy"), tr.monitor_array("flux"), tr.monitor_times
        errs.append(abs(E[-1] - E[0] - np.trapezoid(fl, t)))
    p = _order(errs)
    return CheckResult("energy-flux identity", p >= 1.9, f"order {p:.2f}, defect {errs[-1]:.1e}")


def check_morawetz_signs(g):
    from .morawetz import morawetz_terms

    if g.dim != 4:
        return CheckResult("Morawetz integrand signs", True, "skipped (d != 4)")
    rng = np.random.default_rng(3)
    u = StatePair.from_arrays(g, rng.standard_normal(g.shape) * np.exp(-g.radius ** 2 / 4))
    q, h, a, _ = morawetz_terms(u, pointwise=True)
    lo = min(float(q.min()), float(h.min()), float(a.min()))
    return CheckResult("Morawetz integrand signs", lo >= -1e-12, f"min integrand {lo:.1e}")


def check_khintchine(seed):
    from .deviation_lab import khintchine_ratio

    r = khintchine_ratio(np.ones(8), 2, 10_000, seed)
    return CheckResult("Khintchine p = 2", abs(r / (1 / math.sqrt(2)) - 1) <= 0.02, f"ratio {r:.4f}")


def check_admissible():
    from .deviation_lab import admissible, radial_admissible

    ok = admissible(2, 6) == "sharp" and admissible(3, 6) == "admissible" and radial_admissible(2, 4)
    return CheckResult("admissible pairs", ok, "(2,6) sharp, (3,6) admissible, (2,4) radial")


def check_square_function():
    from .deviation_lab import square_function
    from .multipliers import LatticeBox, unit_project

    g = make_grid(2, 16, 2)
    f = Field(g, np.random.default_rng(5).standard_normal(g.shape))
    brute = sum(np.abs(unit_project(f, k).values) ** 2 for k in LatticeBox.for_grid(g).points())
    err = float(np.max(np.abs(square_function(f) ** 2 - brute)) / np.max(brute))
    return CheckResult("square function vs direct sum", err <= 1e-12, f"rel err {err:.1e}")


def check_partition(g, seed):
    from .data import randomized_split
    from .scattering import partition_by_forcing

    _, forcing = randomized_split(_band_limited(g), None, seed)
    snaps = [(t, forcing(t)) for t in np.linspace(0, 2, 17)]
    total = partition_by_forcing(snaps, 1.0, g).total_norm
    plan = partition_by_forcing(snaps, 0.3 * total, g)
    err = abs(plan.recomposed_cube() - plan.total_norm ** 3) / plan.total_norm ** 3
    ok = err <= 1e-12 and plan.count <= plan.count_bound
    return CheckResult("partition recomposition", ok, f"{plan.count} intervals, rel err {err:.1e}")


def check_scattering_free(g):
    from .nlw_solver import solve
    from .scattering import profile_increments, scattering_profile

    tr = solve(_data(g), None, T=2.0, snap_every=2, nonlinear=False, check_horizon=False)
    inc = float(np.max(profile_increments(scattering_profile(tr))))
    return CheckResult("free pull-back increments", inc <= 1e-10, f"max increment {inc:.1e}")


def check_config_roundtrip(cfg):
    from .cli import parse_config, serialize_config

    text = serialize_config(cfg)
    ok = parse_config(text) == cfg and serialize_config(parse_config(text)) == text
    return CheckResult("config round trip", ok, "parse . serialize . parse")


def run_checks(cfg) -> list[CheckResult]:
    g = make_grid(*cfg["grid"])
    seed = cfg["seed"]
    return [
        check_partition_of_unity(g),
        check_randomizer_identity(g, seed),
        check_free_flow(g),
        check_energy_order(g),
        check_flux_identity(g, seed),
        check_morawetz_signs(g),
        check_khintchine(seed),
        check_admissible(),
        check_square_function(),
        check_partition(g, seed),
        check_scattering_free(g),
        check_config_roundtrip(cfg),
    ]
