"""
Lebesgue, weak and Lorentz norms of lattice step functions.

A lattice function ``u`` is identified with the step function that takes
the value ``u_i`` on a cell of measure ``mu_i``.  Its distribution function
is then itself a step function and every norm below is evaluated in closed
form from the sorted levels, with the normalisation

    ||f||_{q,r} = ( r int_0^inf s^{r-1} lambda_f(s)^{r/q} ds )^{1/r},
    ||f||_{q,inf} = sup_s s lambda_f(s)^{1/q},

under which ``||f||_{q,q} = ||f||_q``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "MeasureSpec",
    "Measure",
    "LorentzIndex",
    "DistributionFunction",
    "lp_norm",
    "distribution_function",
    "lorentz_norm",
]


@dataclass(frozen=True)
class MeasureSpec:
    """Which measure a norm uses.

    ``base="lebesgue"`` is ``dx``; ``base="weighted"`` is ``w^s dx``.  A
    ``multiplier_exponent`` ``e`` multiplies the function by ``w^e`` before
    the norm is taken.
    """

    base: str = "weighted"
    s: float = 1.0
    multiplier_exponent: float = 0.0

    def __post_init__(self):
        if self.base not in ("lebesgue", "weighted"):
            raise ValueError("base must be 'lebesgue' or 'weighted'")

    @classmethod
    def lebesgue(cls, multiplier_exponent=0.0):
        return cls("lebesgue", 0.0, float(multiplier_exponent))

    @classmethod
    def weighted(cls, s=1.0, multiplier_exponent=0.0):
        return cls("weighted", float(s), float(multiplier_exponent))

    @classmethod
    def from_config(cls, cfg):
        base = cfg.get("base", "weighted")
        s = float(cfg.get("s", 1.0 if base == "weighted" else 0.0))
        return cls(base, s if base == "weighted" else 0.0,
                   float(cfg.get("multiplier_exponent", 0.0)))

    def to_config(self):
        return {"base": self.base, "s": self.s,
                "multiplier_exponent": self.multiplier_exponent}

    @property
    def exponent(self):
        return self.s if self.base == "weighted" else 0.0

    def on(self, node_weights, cell_volume):
        """Realise on a lattice given node weight values and ``h^n``."""
        w = np.asarray(node_weights, dtype=float)
        mass = w ** self.exponent * cell_volume
        mult = None if self.multiplier_exponent == 0 else w ** self.multiplier_exponent
        return Measure(mass, mult)

    def on_operator(self, op):
        return self.on(op.node_weights, op.grid.cell_volume)


@dataclass(frozen=True, eq=False)
class Measure:
    """Node masses plus an optional pointwise multiplier."""

    mass: np.ndarray
    multiplier: np.ndarray | None = None

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if not np.all(np.isfinite(m) & (m > 0)):
            raise ValueError("node masses must be positive and finite")

    def values(self, u):
        u = np.asarray(u)
        return u if self.multiplier is None else self.multiplier * u


def _as_measure(mu):
    if isinstance(mu, Measure):
        return mu
    return Measure(np.asarray(mu, dtype=float))


@dataclass(frozen=True)
class LorentzIndex:
    q: float
    r: float

    def __post_init__(self):
        if not self.q >= 1:
            raise ValueError("need q >= 1")
        if not self.r >= 1:
            raise ValueError("need r >= 1 (or inf)")

    @property
    def weak(self):
        return math.isinf(self.r)


def lp_norm(u, p, mu):
    """``(sum_i |w~_i u_i|^p mu_i)^{1/p}``; ``p = inf`` gives the max."""
    mu = _as_measure(mu)
    v = np.abs(mu.values(u))
    if math.isinf(p):
        return float(np.max(v)) if v.size else 0.0
    if p < 1:
        raise ValueError("need p >= 1")
    vmax = np.max(v) if v.size else 0.0
    if vmax == 0:
        return 0.0
    # scale first to avoid overflow for large p
    return float(vmax * np.sum((v / vmax) ** p * mu.mass) ** (1.0 / p))


@dataclass(frozen=True, eq=False)
class DistributionFunction:
    """Right-continuous step function ``lambda(s) = mu{|f| > s}``.

    ``levels`` are the distinct nonzero values of ``|f|`` in decreasing
    order and ``masses[j]`` is the measure of ``{|f| >= levels[j]}``, so
    ``lambda(s) = masses[j]`` for ``levels[j+1] <= s < levels[j]``.
    """

    levels: np.ndarray
    masses: np.ndarray

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.levels.size == 0:
            out = np.zeros_like(s)
            return out if out.ndim else 0.0
        # number of levels strictly above s
        k = np.searchsorted(-self.levels, -s, side="left")
        out = np.where(k > 0, self.masses[np.maximum(k - 1, 0)], 0.0)
        return out if out.ndim else float(out)

    @property
    def breakpoints(self):
        return self.levels


def distribution_function(u, mu):
    mu = _as_measure(mu)
    v = np.abs(mu.values(u)).ravel()
    m = np.broadcast_to(mu.mass, v.shape)
    keep = v > 0
    v, m = v[keep], m[keep]
    if v.size == 0:
        return DistributionFunction(np.zeros(0), np.zeros(0))
    order = np.argsort(-v, kind="stable")
    v, m = v[order], m[order]
    levels, start = np.unique(-v, return_index=True)
    levels = -levels
    cum = np.cumsum(m)
    ends = np.append(start[1:], len(v)) - 1
    return DistributionFunction(levels, cum[ends])


def lorentz_norm(u, idx, mu):
    """Exact ``L^{q,r}`` norm of a step function.

    With levels ``v_1 > ... > v_J`` and cumulative masses ``M_j`` the
    integral collapses to ``sum_j M_j^{r/q} (v_j^r - v_{j+1}^r)``
    (``v_{J+1} = 0``) and the weak norm to ``max_j v_j M_j^{1/q}``.
    """
    if not isinstance(idx, LorentzIndex):
        idx = LorentzIndex(*idx)
    lam = distribution_function(u, mu)
    if lam.levels.size == 0:
        return 0.0
    v, M = lam.levels, lam.masses
    q, r = idx.q, idx.r
    if idx.weak:
        return float(np.max(v * M ** (1.0 / q)))
    vmax = v[0]
    x = v / vmax
    nxt = np.append(x[1:], 0.0)
    total = np.sum(M ** (r / q) * (x ** r - nxt ** r))
    return float(vmax * total ** (1.0 / r))
