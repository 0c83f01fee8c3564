"""Assemble -div(w grad) on a cell-centred lattice and look at its spectrum.

With w = 1 the operator is the classical three-point Laplacian, whose
Dirichlet eigenvalues are known in closed form.  With w = |x|^(1/2) the
mass and the face conductances both vanish at the origin, and the low
spectrum no longer follows the k^2 pattern.
"""
import numpy as np

from degenlab.calculus import decompose
from degenlab.lattice import assemble, build_grid, weighted_inner
from degenlab.weights import Weight

N = 128
grid = build_grid(1, 1.0, N)
flat = decompose(assemble(grid, Weight.constant(1.0)))
k = np.arange(1, N + 1)
exact = 4 / grid.h ** 2 * np.sin(k * np.pi / (2 * (N + 1))) ** 2
print("w=1, max relative eigenvalue error:", np.max(np.abs(flat.eigenvalues / exact - 1)))

op = assemble(grid, Weight.power(0.5))
dec = decompose(op)
print("w=|x|^1/2, five lowest eigenvalues:", np.round(dec.eigenvalues[:5], 3))
print("w=1,       five lowest eigenvalues:", np.round(flat.eigenvalues[:5], 3))

rng = np.random.default_rng(0)
u, v = rng.standard_normal((2, N))
lhs, rhs = weighted_inner(op.apply(u), v, op), weighted_inner(u, op.apply(v), op)
print(f"<Lu, v>_w = {lhs:.12g}, <u, Lv>_w = {rhs:.12g}")
