"""Gaussian envelopes for lattice heat kernels with a degenerate weight.

The upper fit finds the smallest C c product such that
K_t(x, y) <= C exp(-c |x-y|^2 / t) / w_t, with w_t the weighted mass of a
ball of radius sqrt(t).  The near-diagonal lower bound is certified
separately.  Both fits are repeated on a refined grid.
"""
from degenlab.kernels import certify_gaussian
from degenlab.lattice import build_grid
from degenlab.weights import Weight

grid = build_grid(1, 1.0, 256)
for label, w in (("w=1", Weight.constant(1.0)), ("|x|^1/2", Weight.power(0.5)),
                 ("|x|^-1/2", Weight.power(-0.5))):
    coarse, fine = certify_gaussian(w, grid, refine=2)
    print(f"{label:>9}: (C, c) = ({coarse.C:.3f}, {coarse.c:.3f}) -> ({fine.C:.3f}, {fine.c:.3f}), "
          f"stable={coarse.stable}")
