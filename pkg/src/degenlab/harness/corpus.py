"""Deterministic test-function families on a lattice."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TestCorpus", "build_corpus"]


@dataclass(frozen=True, eq=False)
class TestCorpus:
    names: tuple
    values: np.ndarray  # shape (K, M), one column per member

    def __len__(self):
        return self.values.shape[1]

    def __iter__(self):
        return iter(zip(self.names, self.values.T))

    def subset(self, idx):
        idx = np.atleast_1d(idx)
        return TestCorpus(tuple(self.names[i] for i in idx), self.values[:, idx])


def _box(nodes, lower, side):
    return np.all((nodes >= lower) & (nodes < lower + side), axis=1).astype(float)


def build_corpus(grid, seed=0, scales=None, bump_widths=None, random_fields=8,
                 eigen=None, eigen_count=6, min_size=0, nonnegative=False):
    """Indicators, Gaussian bumps, random sign fields and eigenmode mixes.

    Members are defined in physical coordinates, so the same corpus (apart
    from the random fields) is reproduced on every grid of a ladder.

    Parameters
    ----------
    scales : sequence of float, optional
        Cube sides; default ``X 2^{-k}`` for ``k >= 1`` down to ``2h``.
        Each scale gives three cubes: corner at the origin, centred at the
        origin, and centred at ``X/4`` on every axis.
    bump_widths : sequence of float, optional
        Standard deviations of the bumps centred at ``0``, ``X/4``, ``-X/3``.
    random_fields : int
        Number of seeded ``+-1`` fields; raised as needed to reach ``min_size``.
    eigen : SpectralDecomposition, optional
        Source of low eigenmodes for seeded random combinations.
    nonnegative : bool
        Keep only members with ``f >= 0``.
    """
    X, h, n = grid.extent, grid.h, grid.dimension
    nodes = grid.nodes
    rng = np.random.default_rng(seed)
    names, cols = [], []

    if scales is None:
        scales = []
        s = X / 2
        while s >= 2 * h:
            scales.append(s)
            s /= 2
    for s in scales:
        for tag, lower in (("corner", np.zeros(n)), ("centred", -s / 2 * np.ones(n)),
                           ("offset", (X / 4 - s / 2) * np.ones(n))):
            v = _box(nodes, lower, s)
            if v.any():
                names.append(f"cube_{tag}_{s:.4g}")
                cols.append(v)

    if bump_widths is None:
        bump_widths = [X / 4, X / 8, X / 16, X / 32]
    for c in (0.0, X / 4, -X / 3):
        for wdt in bump_widths:
            if wdt < h:
                continue
            r2 = np.sum((nodes - c) ** 2, axis=1)
            names.append(f"bump_{c:.3g}_{wdt:.3g}")
            cols.append(np.exp(-r2 / (2 * wdt ** 2)))

    eig_cols = []
    if eigen is not None and not nonnegative:
        k = min(eigen_count, eigen.size - eigen.zero_modes)
        modes = eigen.modes[:, eigen.zero_modes: eigen.zero_modes + k]
        eig_cols.append(("eigen_lowest", modes[:, 0]))
        for j in range(k - 1):
            coef = rng.standard_normal(k)
            eig_cols.append((f"eigen_mix_{j}", modes @ coef))

    n_random = 0 if nonnegative else random_fields
    deficit = min_size - (len(cols) + len(eig_cols) + n_random)
    if deficit > 0 and not nonnegative:
        n_random += deficit
    for j in range(n_random):
        names.append(f"random_sign_{j}")
        cols.append(rng.choice([-1.0, 1.0], size=grid.size))
    for name, col in eig_cols:
        names.append(name)
        cols.append(col)

    keep = [i for i, c in enumerate(cols) if np.any(c != 0)]
    return TestCorpus(tuple(names[i] for i in keep), np.stack([cols[i] for i in keep], axis=1))
