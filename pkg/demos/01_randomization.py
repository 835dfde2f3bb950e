"""
Unit-scale randomization
========================

Split a function into unit-cube frequency pieces, multiply each piece by
an independent complex Gaussian and add them back up.
"""

import numpy as np

from rwave.core_grid import lp_norm, make_grid
from rwave.data import gaussian
from rwave.deviation_lab import mc_functional
from rwave.multipliers import LatticeBox, coverage, dyadic_project, unit_project
from rwave.randomizer import randomize, sample_coeffs

# a 16^4 grid with two frequency samples per unit cell
g = make_grid(4, 16, 2)
box = LatticeBox.for_grid(g)
print(f"grid {g.shape}, box length {g.length:.3f}, lattice box [-{g.max_lattice}, {g.max_lattice}]^4")

# the bumps psi(xi - k) add up to one at every grid frequency
cov = coverage(g, LatticeBox.cube(4, g.max_lattice + 1))
print("partition of unity error:", np.max(np.abs(cov - 1)))

# randomize a Gaussian, band-limited so the lattice box covers its spectrum;
# the same (seed, sample) always gives the same field
f = dyadic_project(gaussian(g, 0.6), 1, "le")
fw = randomize(f, sample_coeffs(seed=1, box=box, sample=0))
print(f"||f||_2 = {lp_norm(f, 2):.4f}, ||f^w||_2 = {lp_norm(fw, 2):.4f}")

# on average the randomization keeps the squared L2 norm of the pieces
pieces = sum(np.sum(np.abs(unit_project(f, k).values) ** 2) * g.cell_volume for k in box.points())
samples = mc_functional(f, None, "hs_norm", 500, seed=1, s=0.0).samples
print(f"mean ||f^w||^2 = {samples.mean():.4f}  vs  sum_k ||P_k f||^2 = {pieces:.4f}")
