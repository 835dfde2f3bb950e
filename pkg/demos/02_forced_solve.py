"""
The forced cubic wave equation
==============================

Randomize the data, keep the low frequencies as the initial state and
drive the equation with the free evolution of the high frequencies.
"""

import numpy as np

from rwave.core_grid import make_grid
from rwave.data import gaussian, randomized_split
from rwave.multipliers import dyadic_project
from rwave.morawetz import bootstrap_quantities
from rwave.nlw_solver import solve

g = make_grid(4, 16, 2)
init, forcing = randomized_split(dyadic_project(gaussian(g, 1.0), 1, "le"), None, seed=3)

traj = solve(init, forcing, T=2.0, dt=0.05, snap_every=4, check_horizon=False)
E, flux, t = traj.monitor_array("energy"), traj.monitor_array("flux"), traj.monitor_times
print(f"{len(traj)} snapshots, dt = {traj.dt}")
print(f"energy {E[0]:.5f} -> {E[-1]:.5f}")

# the energy changes only through the forcing: dE/dt = -int v_t ((F+v)^3 - v^3)
print("E(T) - E(0) - int flux dt =", E[-1] - E[0] - np.trapezoid(flux, t))

# energy growth A(T) and Morawetz bulk B(T)
rep = bootstrap_quantities(traj, forcing)
print(f"A = {rep.A:.4e}, B = {rep.B:.4e}, sup E <= E(0) + A: {rep.energy_bound_holds}")
