"""L^(-alpha) f against a weighted Riesz potential.

For w = 1 in one dimension the kernel of L^(-alpha) is c |x-y|^(2 alpha - 1),
so the ratio of the lattice potential to the Riesz sum sits near the
classical constant.  With w = |x|^(1/2) the sum uses weighted ball
measures and the ratio stays in a bounded two-sided band.
"""
import numpy as np

from degenlab.calculus import decompose
from degenlab.kernels import riesz_compare
from degenlab.lattice import assemble, build_grid
from degenlab.weights import Weight

grid = build_grid(1, 1.0, 256)
f = np.exp(-16 * grid.axis ** 2)
for label, w, alpha in (("w=1", Weight.constant(1.0), 0.25),
                        ("|x|^1/2", Weight.power(0.5), 0.125)):
    res = riesz_compare(decompose(assemble(grid, w)), alpha, w, f)
    extra = f", classical constant {res.reference:.3f}" if res.reference else ""
    print(f"{label:>8} alpha={alpha}: band [{res.band[0]:.3f}, {res.band[1]:.3f}]{extra}")
