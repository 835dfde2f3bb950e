"""
Partition, perturbation and pull-back
=====================================

Cut the time axis where the forcing has spent a fixed amount of its
L^3 L^6 norm, compare forced and unforced solutions, and watch the
nonlinear state pulled back by the free flow settle down.
"""

import numpy as np

from rwave.core_grid import StatePair, make_grid, no_wrap_horizon, support_radius
from rwave.data import gaussian, randomized_split
from rwave.multipliers import dyadic_project
from rwave.nlw_solver import solve
from rwave.scattering import (
    partition_by_forcing,
    perturbation_gap,
    profile_increments,
    scattering_profile,
)

g = make_grid(4, 16, 2)
_, F = randomized_split(dyadic_project(gaussian(g, 0.6), 1, "le"), None, seed=3)

snaps = [(t, F(t)) for t in np.linspace(0, 2, 21)]
total = partition_by_forcing(snaps, eps=1.0, grid=g).total_norm
plan = partition_by_forcing(snaps, eps=0.4 * total, grid=g)
print(f"{plan.count} intervals (bound {plan.count_bound}), total norm {plan.total_norm:.4f}")

# halving the forcing halves the gap between forced and unforced runs
u0 = StatePair.from_arrays(g, np.exp(-g.radius ** 2))
for s in (0.2, 0.1, 0.05):
    print(f"forcing x{s}: gap {perturbation_gap((0.0, 2.0), u0, F.scaled(s)).total:.4e}")

# V(t) = S(-t) u(t) stops moving once the solution has dispersed
u = StatePair.from_arrays(g, np.exp(-(g.radius / 0.5) ** 2))
T = no_wrap_horizon(g, support_radius(u.pos.values, g))
inc = profile_increments(scattering_profile(solve(u, T=T, snap_every=2)))
print("pull-back increments:", np.array2string(inc[:: max(1, len(inc) // 6)], precision=2))
