"""
Heat kernels on the lattice, Gaussian envelopes and weighted Riesz sums.

The kernel of ``e^{-tL}`` against the lattice measure ``dw`` is
``K_t(x_i, y_j) = (W e^{-t lam} W^T)_{ij}``, so that
``(e^{-tL} u)_i = sum_j K_t(x_i, y_j) u_j m_j``.  Envelopes are fitted to

    K_t(x, y) * w_t(x, y)  <=  C exp(-|x - y|^2 / (c t)),

with ``w_t`` a combination (max, min or geometric mean) of the lattice
ball masses ``w(B(x, sqrt t))`` and ``w(B(y, sqrt t))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import SpectralFunction, spectral_apply
from .weights import Weight, cube_integrals, ball_measure, doubling_report, dyadic_family

__all__ = [
    "HeatKernelSlice",
    "GaussianFit",
    "RieszComparison",
    "kernel_slice",
    "kernel_matrix",
    "lattice_ball_mass",
    "gaussian_fit",
    "fit_window",
    "certify_gaussian",
    "mass_bound",
    "classical_riesz_constant",
    "riesz_sum",
    "riesz_compare",
]


@dataclass(frozen=True, eq=False)
class HeatKernelSlice:
    """Column ``y_j`` of ``K_t`` (or of the kernel of ``(tL)^k e^{-tL}``)."""

    t: float
    j: int
    values: np.ndarray
    derivative: int = 0

    def __len__(self):
        return len(self.values)


def _kernel_values(dec, t, k):
    lam = dec.eigenvalues
    return (t * lam) ** k * np.exp(-t * lam) if k else np.exp(-t * lam)


def kernel_slice(dec, t, j, derivative=0):
    if not t > 0:
        raise ValueError("kernel time must be positive")
    col = dec.kernel(_kernel_values(dec, t, derivative), columns=[j])[:, 0]
    return HeatKernelSlice(float(t), int(j), col, int(derivative))


def kernel_matrix(dec, t, columns=None, derivative=0):
    """Kernel columns for all ``columns`` (default: every node)."""
    if not t > 0:
        raise ValueError("kernel time must be positive")
    return dec.kernel(_kernel_values(dec, t, derivative), columns=columns)


def mass_bound(dec, times, derivative=0):
    """``sup_i sum_j |K_t(x_i, y_j)| m_j`` for each time."""
    out = []
    for t in np.atleast_1d(times):
        K = kernel_matrix(dec, t, derivative=derivative)
        out.append(float(np.max(np.abs(K) @ dec.mass)))
    return np.array(out)


# ---------------------------------------------------------------------------
# ball masses
# ---------------------------------------------------------------------------

def lattice_ball_mass(grid, mass, centers, radii):
    """``sum of m_i over nodes with |x_i - x_c| <= r`` for each centre index
    and each radius; returns shape ``(len(centers), len(radii))``."""
    centers = np.atleast_1d(centers)
    radii = np.atleast_1d(np.asarray(radii, dtype=float))
    out = np.empty((len(centers), len(radii)))
    for a, c in enumerate(centers):
        d = grid.distances(c)
        order = np.argsort(d, kind="stable")
        cum = np.cumsum(mass[order])
        k = np.searchsorted(d[order], radii * (1 + 1e-12), side="right")
        out[a] = cum[k - 1]
    return out


# ---------------------------------------------------------------------------
# Gaussian envelopes
# ---------------------------------------------------------------------------

@dataclass
class GaussianFit:
    """Fitted envelope constants and the sample window they are valid on."""

    C: float
    c: float
    C_lower: float
    c_lower: float
    window: dict
    max_violation: float = 1.0
    stable: bool | None = None
    denominator: str = "max"
    samples: int = 0
    lower_certified: bool = False
    curve: dict = field(default_factory=dict, repr=False)

    def to_json(self):
        return {"C": self.C, "c": self.c, "C_lower": self.C_lower, "c_lower": self.c_lower,
                "window": self.window, "stable": self.stable}


def fit_window(grid, lo=10.0, hi=0.1, count=9):
    """Times log-spaced over ``[lo h^2, hi X^2]``."""
    a, b = lo * grid.h ** 2, hi * grid.extent ** 2
    if not b > a:
        raise ValueError("time window collapses: grid too coarse for the extent")
    return np.geomspace(a, b, count)


def _interior(grid, frac):
    return np.all(np.abs(grid.nodes) <= frac * grid.extent + 1e-12, axis=1)


def _combine(wx, wy, mode):
    if mode == "max":
        return np.maximum(wx, wy)
    if mode == "min":
        return np.minimum(wx, wy)
    if mode == "geo":
        return np.sqrt(wx * wy)
    raise ValueError("denominator must be 'max', 'min' or 'geo'")


def gaussian_fit(dec, times=None, sources=None, derivative=0, denominator="max",
                 interior=0.5, c_grid=None, noise=1e-9, near=3.0, max_sources=64):
    """Fit Gaussian upper and near-diagonal lower envelopes to lattice kernels.

    Parameters
    ----------
    dec : SpectralDecomposition
    times : array_like, optional
        Sample times; default :func:`fit_window`.  Must span two decades.
    sources : array_like of int, optional
        Source nodes; default up to ``max_sources`` evenly spread interior nodes.
    derivative : int
        Fit the kernel of ``(tL)^k e^{-tL}`` instead of the heat kernel.
    denominator : {"max", "min", "geo"}
        How ``w_t(x)`` and ``w_t(y)`` are combined.
    interior : float
        Only nodes with ``|x|_inf <= interior * X`` are sampled.
    noise : float
        Kernel values below ``noise * max|K|`` are dropped from the upper
        fit (they carry only round-off).
    near : float
        Lower bound is certified on ``|x - y| <= near * sqrt(t)``.

    Returns
    -------
    GaussianFit
        ``(C, c)`` minimises ``C * c`` over the sweep; ``(C', c')`` gives
        the largest certified lower envelope at ``|x - y| = near sqrt(t)``.
    """
    grid = dec.grid
    times = fit_window(grid) if times is None else np.asarray(times, dtype=float)
    if times.min() <= 0:
        raise ValueError("times must be positive")
    if math.log10(times.max() / times.min()) < 2 - 1e-9:
        raise ValueError("sample times must span at least two decades")
    inside = np.flatnonzero(_interior(grid, interior))
    if sources is None:
        step = max(1, len(inside) // max_sources)
        sources = inside[::step]
    sources = np.atleast_1d(sources)
    c_grid = np.geomspace(0.5, 64, 200) if c_grid is None else np.asarray(c_grid)
    nodes = grid.nodes

    bx = lattice_ball_mass(grid, dec.mass, inside, np.sqrt(times))
    by = lattice_ball_mass(grid, dec.mass, sources, np.sqrt(times))

    up_Q, up_r, lo_Q, lo_r = [], [], [], []
    for a, t in enumerate(times):
        K = kernel_matrix(dec, t, columns=sources, derivative=derivative)[inside]
        diff = nodes[inside][:, None, :] - nodes[sources][None, :, :]
        if grid.bc == "periodic":
            L = 2 * grid.extent
            diff = diff - L * np.round(diff / L)
        r2 = np.sum(diff ** 2, axis=-1) / t
        den = _combine(bx[:, a][:, None], by[:, a][None, :], denominator)
        Q = np.abs(K) * den
        keep = np.abs(K) > noise * np.max(np.abs(K))
        up_Q.append(Q[keep])
        up_r.append(r2[keep])
        nd = r2 <= near ** 2
        lo_Q.append(K[nd] * den[nd])
        lo_r.append(r2[nd])
    up_Q, up_r = np.concatenate(up_Q), np.concatenate(up_r)
    lo_Q, lo_r = np.concatenate(lo_Q), np.concatenate(lo_r)

    # upper: C(c) = max Q exp(r2 / c)
    with np.errstate(over="ignore"):
        Cs = np.array([np.max(up_Q * np.exp(up_r / c)) for c in c_grid])
    finite = np.isfinite(Cs)
    if not np.any(finite):
        raise ValueError("no finite Gaussian upper constant in the sweep window")
    score = np.where(finite, Cs * c_grid, np.inf)
    k = int(np.argmin(score))
    C, c = float(Cs[k]), float(c_grid[k])

    # lower: K den >= exp(-r2/c') / C'  =>  C'(c') = max exp(-r2/c') / (K den)
    lower_ok = bool(np.all(lo_Q > 0))
    if lower_ok:
        Cl = np.array([np.max(np.exp(-lo_r / cl) / lo_Q) for cl in c_grid])
        # the edge score is flat once c' exceeds the true rate; take the
        # fastest decay that is within 1% of the best edge value
        edge = Cl * np.exp(near ** 2 / c_grid)
        kl = int(np.flatnonzero(edge <= 1.01 * np.min(edge))[0])
        C_lower, c_lower = float(Cl[kl]), float(c_grid[kl])
    else:
        C_lower, c_lower = math.inf, math.nan
    viol = float(np.max(up_Q * np.exp(up_r / c)) / C)
    window = {"t_min": float(times.min()), "t_max": float(times.max()),
              "count": int(len(times)), "interior": float(interior),
              "near": float(near), "h": grid.h, "X": grid.extent, "N": grid.points}
    return GaussianFit(C, c, C_lower, c_lower, window, viol, None, denominator,
                       int(up_Q.size), lower_ok and math.isfinite(C_lower),
                       {"c_grid": c_grid, "C": Cs})


def certify_gaussian(weight, grid, refine=2, tol=0.2, derivative=0, denominator="max",
                     interior=0.5, coeff=None):
    """Fit on ``grid`` and on its refinement; ``stable`` when both ``C`` and
    ``c`` agree within ``tol`` (relative) and the lower bound is certified
    on both."""
    from .calculus import decompose
    from .lattice import assemble

    fits = []
    for g in (grid, grid.refine(refine)):
        dec = decompose(assemble(g, weight, coeff))
        fits.append(gaussian_fit(dec, times=fit_window(grid), derivative=derivative,
                                 denominator=denominator, interior=interior))
    a, b = fits
    stable = abs(b.C / a.C - 1) <= tol and abs(b.c / a.c - 1) <= tol
    if derivative == 0:
        # derivative kernels change sign, so no lower envelope is expected
        stable = stable and a.lower_certified and b.lower_certified
    a.stable = b.stable = bool(stable)
    return fits


# ---------------------------------------------------------------------------
# Riesz sums
# ---------------------------------------------------------------------------

def classical_riesz_constant(n, alpha):
    """``c_{n,a}`` in ``(-Delta)^{-a} f = c_{n,a} int |x - y|^{2a - n} f(y) dy``."""
    if not 0 < alpha < n / 2:
        raise ValueError("need 0 < alpha < n/2")
    return math.gamma(n / 2 - alpha) / (4 ** alpha * math.pi ** (n / 2) * math.gamma(alpha))


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass
class RieszComparison:
    alpha: float
    band: tuple
    ratio: np.ndarray
    nodes: np.ndarray
    rd: float
    reference: float | None = None
    passed: bool = False

    @property
    def spread(self):
        lo, hi = self.band
        return hi / lo if lo > 0 else math.inf

    def to_json(self):
        return {"alpha": self.alpha, "band": list(self.band), "spread": self.spread,
                "RD": self.rd, "reference": self.reference, "pass": self.passed}


def _ball_masses(weight, x, r, resolution):
    """Continuum ``w(B(x_i, r_ij))`` for node rows ``x`` and radii ``r``."""
    n = weight.dimension
    if n == 1:
        xi = np.broadcast_to(x[:, :1], r.shape)
        lo = (xi - r).reshape(-1, 1)
        hi = (xi + r).reshape(-1, 1)
        return cube_integrals(weight, lo, hi).reshape(r.shape)
    if weight.kind == "constant":
        return weight.scale * unit_ball_volume(n) * r ** n
    out = np.empty_like(r)
    for a in range(r.shape[0]):
        for b in range(r.shape[1]):
            out[a, b] = ball_measure(weight, x[a], r[a, b], resolution)
    return out


def riesz_sum(grid, mass, weight, alpha, f, rows=None, resolution=32):
    """``R_a f(x) = sum_j |x - y_j|^{2a} / w(B(x, |x - y_j|)) f_j m_j``.

    The diagonal term uses radius ``h/2``.
    """
    nodes = grid.nodes
    rows = np.arange(grid.size) if rows is None else np.atleast_1d(rows)
    diff = nodes[rows][:, None, :] - nodes[None, :, :]
    r = np.linalg.norm(diff, axis=-1)
    r = np.where(r == 0, grid.h / 2, r)
    B = _ball_masses(weight, nodes[rows], r, resolution)
    return (r ** (2 * alpha) / B) @ (np.asarray(f) * mass)


def riesz_compare(dec, alpha, weight, f, interior=0.25, rd=None, resolution=32,
                  max_spread=10.0):
    """Compare ``L^{-alpha} f`` with the weighted Riesz sum on interior nodes.

    Requires ``alpha < RD / 2``; ``RD`` defaults to the reverse-doubling
    exponent of ``weight`` over a dyadic family spanning the grid scales.
    """
    grid = dec.grid
    if grid.bc != "dirichlet":
        raise ValueError("Riesz comparison needs a Dirichlet grid")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("f must be nonnegative")
    if rd is None:
        kmax = int(math.ceil(math.log2(2 * grid.extent / grid.h)))
        kmin = int(math.floor(-math.log2(grid.extent)))
        fam = dyadic_family(np.zeros((1, grid.dimension)), -kmin, kmax, translates=4,
                            dimension=grid.dimension)
        rd = doubling_report(weight, fam).RD
    if not alpha < rd / 2:
        raise ValueError(f"alpha = {alpha} violates the precondition alpha < RD/2 = {rd / 2:.4g}")
    rows = np.flatnonzero(_interior(grid, interior))
    ref = None
    if weight.is_constant:
        ref = classical_riesz_constant(grid.dimension, alpha) * unit_ball_volume(grid.dimension)
    if not np.any(f > 0):
        return RieszComparison(alpha, (0.0, 0.0), np.zeros(0), rows, rd, ref, True)
    lhs = spectral_apply(dec, SpectralFunction.power(-alpha), f)[rows]
    rhs = riesz_sum(grid, dec.mass, weight, alpha, f, rows, resolution)
    ratio = lhs / rhs
    band = (float(np.min(ratio)), float(np.max(ratio)))
    passed = band[0] > 0 and band[1] / band[0] <= max_spread
    return RieszComparison(alpha, band, ratio, rows, rd, ref, bool(passed))
