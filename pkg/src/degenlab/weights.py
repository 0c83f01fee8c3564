"""
Weights on R^n and their Muckenhoupt / reverse Hoelder class constants.

Weights come in four flavours: constants, radial powers ``c |x|^beta``,
tensor products of one-dimensional powers ``c prod_i |x_i|^{beta_i}`` and
piecewise-constant samples on a regular cell grid.  Cube integrals of powers
of a weight are evaluated in closed form whenever possible, so that the
class functionals below are exact on power weights and a non-integrable
singularity shows up as ``inf`` rather than as quadrature noise.

The supremum over all cubes in the class definitions is replaced by a
deterministic dyadic family (:func:`dyadic_family`).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

__all__ = [
    "Weight",
    "Cube",
    "CubeFamily",
    "WeightClass",
    "A",
    "RH",
    "Apq",
    "WeightClassEstimate",
    "DoublingReport",
    "MembershipVerdict",
    "EquivalenceReport",
    "dyadic_family",
    "cube_measure",
    "cube_integrals",
    "ball_measure",
    "class_constant",
    "power_membership",
    "equivalence_check",
    "doubling_report",
]


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Weight:
    """A positive, locally integrable function on R^n.

    Use the constructors :meth:`constant`, :meth:`power`, :meth:`tensor`
    and :meth:`sampled` rather than instantiating directly.
    """

    dimension: int
    kind: str
    scale: float = 1.0
    beta: tuple = ()
    values: np.ndarray | None = None
    lower: np.ndarray | None = None
    spacing: float | None = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError("weight scale must be positive and finite")
        if self.kind == "power":
            (b,) = self.beta
            if not b > -self.dimension:
                raise ValueError(
                    f"|x|^{b} is not locally integrable in dimension {self.dimension}"
                )
        elif self.kind == "tensor":
            if len(self.beta) != self.dimension:
                raise ValueError("tensor weight needs one exponent per axis")
            if any(not b > -1 for b in self.beta):
                raise ValueError("each tensor factor |x_i|^b needs b > -1")
        elif self.kind == "sampled":
            v = np.asarray(self.values, dtype=float)
            if v.ndim != self.dimension:
                raise ValueError("sampled values must have one axis per dimension")
            if not np.all((v > 0) & np.isfinite(v)):
                raise ValueError("sampled weight values must lie in (0, inf)")
            if self.spacing is None or self.spacing <= 0:
                raise ValueError("sampled weight needs a positive spacing")
        elif self.kind != "constant":
            raise ValueError(f"unknown weight kind {self.kind!r}")

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c=1.0, dimension=1):
        return cls(dimension=dimension, kind="constant", scale=float(c))

    @classmethod
    def power(cls, beta, dimension=1, scale=1.0):
        """Radial power weight ``scale * |x|^beta``; requires ``beta > -n``."""
        if dimension == 1:
            return cls(dimension=1, kind="tensor", scale=float(scale), beta=(float(beta),))
        return cls(dimension=dimension, kind="power", scale=float(scale), beta=(float(beta),))

    @classmethod
    def tensor(cls, betas, scale=1.0):
        betas = tuple(float(b) for b in betas)
        return cls(dimension=len(betas), kind="tensor", scale=float(scale), beta=betas)

    @classmethod
    def sampled(cls, values, lower, spacing):
        """Piecewise-constant weight; ``values[i, ...]`` lives on the cell
        ``lower + spacing * [i, i+1] x ...``."""
        values = np.asarray(values, dtype=float)
        lower = np.broadcast_to(np.asarray(lower, dtype=float), (values.ndim,)).copy()
        return cls(dimension=values.ndim, kind="sampled", values=values,
                   lower=lower, spacing=float(spacing))

    @classmethod
    def from_config(cls, cfg):
        """Build from a ``{kind, beta, dimension}`` mapping."""
        kind = cfg.get("kind", "power")
        n = int(cfg.get("dimension", 1))
        scale = float(cfg.get("scale", 1.0))
        if kind == "constant":
            return cls.constant(cfg.get("value", scale), n)
        if kind == "power":
            return cls.power(float(cfg["beta"]), n, scale=scale)
        if kind == "tensor":
            return cls.tensor(cfg["beta"], scale=scale)
        raise ValueError(f"weight kind {kind!r} cannot be built from a config")

    def to_config(self):
        if self.kind == "constant":
            return {"kind": "constant", "value": self.scale, "dimension": self.dimension}
        if self.kind == "sampled":
            return {"kind": "sampled", "dimension": self.dimension}
        if self.kind == "tensor" and self.dimension == 1:
            return {"kind": "power", "beta": self.beta[0], "dimension": 1, "scale": self.scale}
        beta = self.beta[0] if self.kind == "power" else list(self.beta)
        return {"kind": self.kind, "beta": beta, "dimension": self.dimension,
                "scale": self.scale}

    # -- algebra ----------------------------------------------------------
    @property
    def is_constant(self):
        if self.kind == "constant":
            return True
        if self.kind in ("power", "tensor"):
            return all(b == 0 for b in self.beta)
        return False

    @property
    def singular_points(self):
        """Points where the weight may vanish or blow up."""
        if self.kind in ("power", "tensor") and not self.is_constant:
            return np.zeros((1, self.dimension))
        return np.zeros((0, self.dimension))

    def __pow__(self, s):
        s = float(s)
        if self.kind == "constant":
            return Weight.constant(self.scale ** s, self.dimension)
        if self.kind == "sampled":
            return Weight.sampled(self.values ** s, self.lower, self.spacing)
        return Weight(dimension=self.dimension, kind=self.kind, scale=self.scale ** s,
                      beta=tuple(b * s for b in self.beta))

    def __mul__(self, c):
        c = float(c)
        if self.kind == "sampled":
            return Weight.sampled(self.values * c, self.lower, self.spacing)
        return Weight(dimension=self.dimension, kind=self.kind, scale=self.scale * c,
                      beta=self.beta)

    __rmul__ = __mul__

    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(..., n)`` (or ``(...,)`` if n=1)."""
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if self.kind == "constant":
            return np.full(x.shape[:-1], self.scale)
        if self.kind == "power":
            r = np.linalg.norm(x, axis=-1)
            with np.errstate(divide="ignore"):
                return self.scale * r ** self.beta[0]
        if self.kind == "tensor":
            out = np.full(x.shape[:-1], self.scale)
            with np.errstate(divide="ignore"):
                for k, b in enumerate(self.beta):
                    if b != 0:
                        out = out * np.abs(x[..., k]) ** b
            return out
        idx = np.floor((x - self.lower) / self.spacing).astype(int)
        shape = np.array(self.values.shape)
        if np.any(idx < 0) or np.any(idx >= shape):
            raise ValueError("point outside the support of the sampled weight")
        return self.values[tuple(idx[..., k] for k in range(self.dimension))]

    def __repr__(self):
        if self.kind == "sampled":
            return f"Weight(sampled, shape={self.values.shape})"
        return f"Weight({self.kind}, n={self.dimension}, beta={self.beta}, scale={self.scale:g})"


# ---------------------------------------------------------------------------
# cubes and families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Cube:
    """Axis-parallel cube given by its centre and side length."""

    center: tuple
    side: float

    def __post_init__(self):
        if not self.side > 0:
            raise ValueError("cube side must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    @classmethod
    def from_corner(cls, corner, side):
        corner = np.atleast_1d(np.asarray(corner, dtype=float))
        return cls(tuple(corner + side / 2), side)

    @property
    def dimension(self):
        return len(self.center)

    @property
    def lower(self):
        return np.array(self.center) - self.side / 2

    @property
    def upper(self):
        return np.array(self.center) + self.side / 2

    def dilate(self, factor=2.0):
        return Cube(self.center, self.side * factor)


@dataclass(frozen=True, eq=False)
class CubeFamily:
    """Finite list of cubes plus the descriptor that regenerates it.

    ``scale_index`` labels each cube with its dyadic generation; larger
    index means a smaller cube.
    """

    centers: np.ndarray
    sides: np.ndarray
    scale_index: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.sides) == 0:
            raise ValueError("cube family must not be empty")
        if np.any(self.sides <= 0):
            raise ValueError("cube sides must be positive")

    def __len__(self):
        return len(self.sides)

    @property
    def dimension(self):
        return self.centers.shape[1]

    def cubes(self):
        return [Cube(tuple(c), s) for c, s in zip(self.centers, self.sides)]

    def union(self, other):
        desc = {"union": [self.descriptor, other.descriptor]}
        return CubeFamily(np.vstack([self.centers, other.centers]),
                          np.concatenate([self.sides, other.sides]),
                          np.concatenate([self.scale_index, other.scale_index]), desc)

    @classmethod
    def from_cubes(cls, cubes):
        centers = np.array([c.center for c in cubes], dtype=float)
        sides = np.array([c.side for c in cubes], dtype=float)
        return cls(centers, sides, np.round(-np.log2(sides)).astype(int),
                   {"explicit": len(cubes)})

    @classmethod
    def from_descriptor(cls, descriptor):
        return dyadic_family(**descriptor)


def dyadic_family(anchors=None, k_min=0, k_max=8, translates=4, dimension=1):
    """Dyadic cube family around a set of anchor points.

    Sides run over ``2**-k`` for ``k = -k_min .. k_max``.  At each anchor and
    scale the family holds the cubes having the anchor as a corner (one per
    orthant), the cube centred at the anchor, and ``translates`` shifted
    copies of the centred cube along every axis in both directions (shifts
    ``j * side``).
    """
    if anchors is None:
        anchors = np.zeros((1, dimension))
    anchors = np.atleast_2d(np.asarray(anchors, dtype=float))
    if anchors.shape[1] != dimension:
        anchors = anchors.reshape(-1, dimension)
    n = dimension
    orthants = np.array(np.meshgrid(*[[-0.5, 0.5]] * n, indexing="ij")).reshape(n, -1).T
    shifts = [np.zeros(n)]
    for j in range(1, translates + 1):
        for ax in range(n):
            for sgn in (-1, 1):
                e = np.zeros(n)
                e[ax] = sgn * j
                shifts.append(e)
    shifts = np.array(shifts)
    centers, sides, index = [], [], []
    for k in range(-k_min, k_max + 1):
        s = 2.0 ** (-k)
        for a in anchors:
            offs = np.vstack([orthants, shifts]) * s
            centers.append(a + offs)
            sides.append(np.full(len(offs), s))
            index.append(np.full(len(offs), k))
    desc = {"anchors": anchors.tolist(), "k_min": k_min, "k_max": k_max,
            "translates": translates, "dimension": dimension}
    return CubeFamily(np.vstack(centers), np.concatenate(sides),
                      np.concatenate(index), desc)


# ---------------------------------------------------------------------------
# integrals
# ---------------------------------------------------------------------------

def _power_antiderivative(x, g):
    if g == -1.0:
        return np.sign(x) * np.log(np.abs(x))
    return np.sign(x) * np.abs(x) ** (g + 1) / (g + 1)


def _power_integral_1d(a, b, g):
    """Exact int_a^b |x|^g dx, vectorised; inf when the singularity is hit."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if g == 0:
        return b - a
    with np.errstate(divide="ignore", invalid="ignore"):
        if g > -1:
            return _power_antiderivative(b, g) - _power_antiderivative(a, g)
        out = np.where(a * b > 0,
                       np.abs(_power_antiderivative(b, g) - _power_antiderivative(a, g)),
                       np.inf)
    return out


def _triangle_power_integral(P, Q, g):
    """Signed int over triangle (0, P, Q) of |y|^g, P and Q of shape (M, 2).

    Uses the antiderivative along the edge,
    ``int (d^2+s^2)^{g/2} ds = s d^g 2F1(1/2, -g/2; 3/2; -s^2/d^2)``.
    """
    e = Q - P
    length = np.hypot(e[:, 0], e[:, 1])
    ok = length > 0
    e = e / np.where(ok, length, 1.0)[:, None]
    cross = P[:, 0] * e[:, 1] - P[:, 1] * e[:, 0]
    d = np.abs(cross)
    sP = P[:, 0] * e[:, 0] + P[:, 1] * e[:, 1]
    sQ = sP + length
    out = np.zeros(len(P))
    good = ok & (d > 0)
    if np.any(good):
        dd = d[good]

        def G(s):
            return s * dd ** g * special.hyp2f1(0.5, -g / 2, 1.5, -(s / dd) ** 2)

        out[good] = np.sign(cross[good]) * dd / (g + 2) * (G(sQ[good]) - G(sP[good]))
    return out


def _radial_power_rect(lower, upper, g):
    """int over rectangles [lower, upper] of |y|^g in R^2 (vectorised)."""
    lo = np.atleast_2d(lower)
    hi = np.atleast_2d(upper)
    if g == 0:
        return np.prod(hi - lo, axis=1)
    corners = [np.c_[lo[:, 0], lo[:, 1]], np.c_[hi[:, 0], lo[:, 1]],
               np.c_[hi[:, 0], hi[:, 1]], np.c_[lo[:, 0], hi[:, 1]]]
    total = np.zeros(len(lo))
    for k in range(4):
        total += _triangle_power_integral(corners[k], corners[(k + 1) % 4], g)
    if g <= -2:
        contains = np.all((lo <= 0) & (hi >= 0), axis=1)
        total = np.where(contains, np.inf, total)
    return np.abs(total)


def _sampled_box_integral(w, lo, hi):
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    n = w.dimension
    shape = w.values.shape
    sup_lo = w.lower
    sup_hi = w.lower + w.spacing * np.array(shape)
    if np.any(lo < sup_lo - 1e-12) or np.any(hi > sup_hi + 1e-12):
        raise ValueError("cube is not covered by the support of the sampled weight")
    out = np.empty(len(lo))
    for m in range(len(lo)):
        overlaps = []
        for k in range(n):
            edges = w.lower[k] + w.spacing * np.arange(shape[k] + 1)
            ov = np.clip(np.minimum(edges[1:], hi[m, k]) - np.maximum(edges[:-1], lo[m, k]),
                         0, None)
            overlaps.append(ov)
        weights = overlaps[0]
        for ov in overlaps[1:]:
            weights = np.multiply.outer(weights, ov)
        out[m] = np.sum(weights * w.values)
    return out


def cube_integrals(w, lower, upper):
    """Vectorised ``int_Q w`` over boxes ``[lower, upper]`` of shape (M, n)."""
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    if w.kind == "constant":
        return w.scale * np.prod(upper - lower, axis=1)
    if w.kind == "tensor":
        out = np.full(len(lower), w.scale)
        for k, b in enumerate(w.beta):
            out = out * _power_integral_1d(lower[:, k], upper[:, k], b)
        return out
    if w.kind == "power":
        if w.dimension != 2:
            raise NotImplementedError("radial power cube integrals are implemented for n <= 2")
        return w.scale * _radial_power_rect(lower, upper, w.beta[0])
    return _sampled_box_integral(w, lower, upper)


def _as_cube(Q):
    if isinstance(Q, Cube):
        return Q
    center, side = Q
    return Cube(tuple(np.atleast_1d(center)), side)


def cube_measure(w, Q, resolution=64):
    """Weighted measure ``w(Q)`` of an axis-parallel cube.

    Power and tensor-power weights use exact antiderivatives (the
    singular point never enters a quadrature node); constants and sampled
    weights are exact as well.  ``resolution`` only matters for the
    essential-infimum surrogates in :func:`class_constant`, but is validated
    here for a uniform interface.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    Q = _as_cube(Q)
    if Q.dimension != w.dimension:
        raise ValueError("cube and weight dimensions differ")
    return float(cube_integrals(w, Q.lower[None], Q.upper[None])[0])


def _ball_radial_2d(g, center_norm, r, resolution):
    """int_{B(c, r)} |y|^g dy in R^2 by polar coordinates about the origin."""
    d, r = float(center_norm), float(r)
    total = 0.0
    inner = max(r - d, 0.0)
    if inner > 0:
        total += 2 * np.pi * inner ** (g + 2) / (g + 2)
    a, b = abs(d - r), d + r
    if b <= a or d == 0:
        return total
    # s = mid - half cos(theta) removes the square-root endpoint behaviour
    x, wq = np.polynomial.legendre.leggauss(resolution)
    theta = (x + 1) * np.pi / 2
    mid, half = (a + b) / 2, (b - a) / 2
    s = mid - half * np.cos(theta)
    cosang = np.clip((s ** 2 + d ** 2 - r ** 2) / (2 * s * d), -1, 1)
    arc = 2 * np.arccos(cosang)
    integrand = s ** (g + 1) * arc * half * np.sin(theta)
    total += np.pi / 2 * np.sum(wq * integrand)
    return total


def _ball_polar(w, x, r, resolution):
    """Polar Gauss-Legendre x trapezoid quadrature about the ball centre."""
    xr, wr = np.polynomial.legendre.leggauss(resolution)
    rho = (xr + 1) * r / 2
    wr = wr * r / 2
    if w.dimension == 1:
        pts = np.concatenate([x[0] - rho, x[0] + rho])
        vals = w(pts[:, None])
        return float(np.sum(np.concatenate([wr, wr]) * vals))
    m = 2 * resolution
    th = 2 * np.pi * np.arange(m) / m
    P = x[None, None, :] + rho[:, None, None] * np.stack([np.cos(th), np.sin(th)], -1)[None]
    vals = w(P)
    return float(np.sum(wr[:, None] * rho[:, None] * vals) * 2 * np.pi / m)


def ball_measure(w, x, r, resolution=64):
    """Weighted measure ``w(B(x, r))`` of a Euclidean ball.

    Exact in one dimension and for constant weights.  Radial powers in the
    plane are integrated in polar coordinates about the origin, where the
    only non-smooth factor is the arc length; other planar weights use a
    polar rule about the centre.  Both converge as ``resolution`` grows.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if not r > 0:
        raise ValueError("radius must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if len(x) != w.dimension:
        raise ValueError("point and weight dimensions differ")
    if w.dimension == 1:
        return float(cube_integrals(w, [x - r], [x + r])[0])
    if w.kind == "constant":
        return w.scale * math.pi ** (w.dimension / 2) * r ** w.dimension / math.gamma(
            w.dimension / 2 + 1)
    if w.kind == "power" and w.dimension == 2:
        g = w.beta[0]
        if g <= -2 and np.linalg.norm(x) <= r:
            return math.inf
        return w.scale * _ball_radial_2d(g, np.linalg.norm(x), r, resolution)
    if w.kind == "sampled":
        lo = w.lower
        hi = w.lower + w.spacing * np.array(w.values.shape)
        if np.any(x - r < lo) or np.any(x + r > hi):
            raise ValueError("ball is not covered by the support of the sampled weight")
    return _ball_polar(w, x, r, resolution)


# ---------------------------------------------------------------------------
# class constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightClass:
    """Which class functional to evaluate: ``A_p``, ``RH_q`` or ``A_{p,q}``."""

    kind: str
    p: float | None = None
    q: float | None = None

    def __post_init__(self):
        if self.kind == "A":
            if self.p is None or self.p < 1:
                raise ValueError("A_p needs p >= 1")
        elif self.kind == "RH":
            if self.q is None or self.q <= 1:
                raise ValueError("RH_q needs q > 1")
        elif self.kind == "Apq":
            if self.p is None or self.q is None or not 1 <= self.p <= self.q:
                raise ValueError("A_{p,q} needs 1 <= p <= q")
        else:
            raise ValueError(f"unknown class {self.kind!r}")

    @property
    def label(self):
        if self.kind == "A":
            return f"A_{self.p:g}"
        if self.kind == "RH":
            return f"RH_{self.q:g}"
        return f"A_{{{self.p:g},{self.q:g}}}"

    @property
    def exponents(self):
        return [e for e in (self.p, self.q) if e is not None]

    @property
    def uses_essential_bounds(self):
        return (self.kind in ("A", "Apq") and self.p == 1) or (
            self.kind == "RH" and math.isinf(self.q))


def A(p):
    return WeightClass("A", p=float(p))


def RH(q):
    return WeightClass("RH", q=float(q))


def Apq(p, q):
    return WeightClass("Apq", p=float(p), q=float(q))


@dataclass
class WeightClassEstimate:
    cls: WeightClass
    constant: float
    diverged: bool
    family: dict
    resolution: int
    per_scale: dict = field(default_factory=dict)

    def to_json(self):
        return {"class": self.cls.label, "exponents": self.cls.exponents,
                "constant": self.constant if math.isfinite(self.constant) else "inf",
                "diverged": bool(self.diverged), "family": self.family}

    def dumps(self):
        return json.dumps(self.to_json())


def _raw_power(w, s):
    """``w**s`` without the integrability guard; cube integrals of the result
    come back as ``inf`` where ``w**s`` is not locally integrable."""
    if w.kind in ("power", "tensor"):
        out = object.__new__(Weight)
        for name, val in (("dimension", w.dimension), ("kind", w.kind),
                          ("scale", w.scale ** s), ("beta", tuple(b * s for b in w.beta)),
                          ("values", None), ("lower", None), ("spacing", None)):
            object.__setattr__(out, name, val)
        return out
    return w ** s


def _averages(w, s, lower, upper):
    vol = np.prod(upper - lower, axis=1)
    return cube_integrals(_raw_power(w, s), lower, upper) / vol


def _node_extrema(w, lower, upper, resolution):
    """min and max of w over a midpoint lattice in each cube (ess inf/sup surrogate)."""
    n = w.dimension
    t = (np.arange(resolution) + 0.5) / resolution
    grid = np.array(np.meshgrid(*[t] * n, indexing="ij")).reshape(n, -1).T
    mins = np.empty(len(lower))
    maxs = np.empty(len(lower))
    for m in range(len(lower)):
        pts = lower[m] + grid * (upper[m] - lower[m])
        with np.errstate(divide="ignore"):
            v = w(pts)
        mins[m] = v.min()
        maxs[m] = v.max()
    return mins, maxs


def _functional(w, cls, lower, upper, resolution):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if cls.kind == "A":
            p = cls.p
            if p == 1:
                mins, _ = _node_extrema(w, lower, upper, resolution)
                return _averages(w, 1.0, lower, upper) / mins
            pp = p / (p - 1)
            return _averages(w, 1.0, lower, upper) * _averages(w, 1 - pp, lower, upper) ** (p - 1)
        if cls.kind == "RH":
            q = cls.q
            if math.isinf(q):
                _, maxs = _node_extrema(w, lower, upper, resolution)
                return maxs / _averages(w, 1.0, lower, upper)
            return _averages(w, q, lower, upper) ** (1 / q) / _averages(w, 1.0, lower, upper)
        p, q = cls.p, cls.q
        left = _averages(w, q, lower, upper) ** (1 / q)
        if p == 1:
            mins, _ = _node_extrema(w, lower, upper, resolution)
            return left / mins
        pp = p / (p - 1)
        return left * _averages(w, -pp, lower, upper) ** (1 / pp)


def class_constant(w, cls, family, resolution=32, growth_factor=1.1):
    """Estimate ``[w]_cls`` as a supremum over a cube family.

    The divergence flag is raised when any cube functional is infinite, when
    the running supremum grows by ``growth_factor`` or more from the
    second-finest to the finest scale, or when the last of two quadrature
    refinements still moves the estimate by that factor.
    """
    lower = family.centers - family.sides[:, None] / 2
    upper = family.centers + family.sides[:, None] / 2
    estimates = []
    for res in (resolution, 2 * resolution, 4 * resolution):
        vals = _functional(w, cls, lower, upper, res)
        vals = np.where(np.isnan(vals), np.inf, vals)
        estimates.append(vals)
        if not cls.uses_essential_bounds:
            break
    vals = estimates[-1]
    per_scale = {}
    for k in np.unique(family.scale_index):
        per_scale[int(k)] = float(np.max(vals[family.scale_index == k]))
    const = float(np.max(vals))
    diverged = not math.isfinite(const)
    if not diverged:
        ks = sorted(per_scale)
        running = np.maximum.accumulate([per_scale[k] for k in ks])
        if len(running) >= 2 and running[-1] >= growth_factor * running[-2]:
            diverged = True
        if len(estimates) > 1:
            prev = float(np.max(estimates[-2]))
            if const >= growth_factor * prev:
                diverged = True
    return WeightClassEstimate(cls, const, diverged, dict(family.descriptor), resolution,
                               per_scale)


# ---------------------------------------------------------------------------
# analytic membership of power weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MembershipVerdict:
    member: bool
    interval: tuple
    rule: str


def power_membership(beta, cls, dimension=1):
    """Exact class membership of ``|x|^beta`` on R^n.

    ``cls`` is a :class:`WeightClass` or one of the tuples
    ``("A2RH", p, q)`` for ``A_2 \\cap RH_{q/p}`` and ``("Apq_root", p, q)``
    for ``w^{1/p} \\in A_{p,q}``.
    """
    n = dimension
    if not beta > -n:
        raise ValueError("|x|^beta is a weight only for beta > -n")
    inf = math.inf
    if isinstance(cls, tuple):
        kind, p, q = cls
        if kind == "A2RH":
            lo, hi, rule = -n * p / q, n, "-n p/q < beta < n"
        elif kind == "Apq_root":
            lo = max(-n, -n * p / q)
            hi = n * (p - 1) if p > 1 else 0.0
            rule = "w in A_p and RH_{q/p}"
        else:
            raise ValueError(f"unknown membership class {kind!r}")
        closed_hi = kind == "Apq_root" and p == 1
    elif cls.kind == "A":
        p = cls.p
        if p == 1:
            lo, hi, rule, closed_hi = -n, 0.0, "-n < beta <= 0", True
        else:
            lo, hi, rule, closed_hi = -n, n * (p - 1), "-n < beta < n(p-1)", False
    elif cls.kind == "RH":
        q = cls.q
        if math.isinf(q):
            lo, hi, rule, closed_hi = 0.0, inf, "beta >= 0", False
            return MembershipVerdict(beta >= 0, (lo, hi), rule)
        lo, hi, rule, closed_hi = -n / q, inf, "q beta > -n", False
    else:
        p, q = cls.p, cls.q
        if p == 1:
            lo, hi, rule, closed_hi = -n / q, 0.0, "-n/q < beta <= 0", True
        else:
            lo, hi, rule, closed_hi = -n / q, n * (1 - 1 / p), "-n/q < beta < n/p'", False
    member = lo < beta and (beta <= hi if closed_hi else beta < hi)
    return MembershipVerdict(bool(member), (lo, hi), rule)


@dataclass
class EquivalenceReport:
    p: float
    q: float
    estimates: dict
    checks: dict
    analytic: dict

    @property
    def consistent(self):
        return all(self.checks.values()) and all(
            v.get("agrees", True) for v in self.analytic.values())

    def to_json(self):
        return {"p": self.p, "q": self.q,
                "estimates": {k: e.to_json() for k, e in self.estimates.items()},
                "checks": self.checks, "analytic": self.analytic,
                "consistent": self.consistent}


def equivalence_check(w, p, q, family, resolution=32):
    """Compare both sides of the class equivalences for a weight.

    Checks that ``w in A_p cap RH_{q/p}``, ``w^{q/p} in A_{1+q/p'}`` and
    ``w^{1/p} in A_{p,q}`` are finite or divergent together, and that
    ``w^{1/p} in A_{p,q}`` matches ``w^{1/p} in A_{1+1/p'} cap RH_q``.
    """
    if not 1 < p < q < math.inf:
        raise ValueError("need 1 < p < q < inf")
    pp = p / (p - 1)
    root = _raw_power(w, 1 / p)
    est = {
        "A_p[w]": class_constant(w, A(p), family, resolution),
        "RH_{q/p}[w]": class_constant(w, RH(q / p), family, resolution),
        "A_{1+q/p'}[w^{q/p}]": class_constant(_raw_power(w, q / p), A(1 + q / pp), family, resolution),
        "A_{p,q}[w^{1/p}]": class_constant(root, Apq(p, q), family, resolution),
        "A_{1+1/p'}[w^{1/p}]": class_constant(root, A(1 + 1 / pp), family, resolution),
        "RH_q[w^{1/p}]": class_constant(root, RH(q), family, resolution),
    }
    fin = {k: not e.diverged for k, e in est.items()}
    left = fin["A_p[w]"] and fin["RH_{q/p}[w]"]
    checks = {
        "item6": left == fin["A_{1+q/p'}[w^{q/p}]"],
        "item8": left == fin["A_{p,q}[w^{1/p}]"],
        "item7": fin["A_{p,q}[w^{1/p}]"] == (fin["A_{1+1/p'}[w^{1/p}]"] and fin["RH_q[w^{1/p}]"]),
    }
    analytic = {}
    if w.kind in ("power", "tensor") and len(set(w.beta)) == 1 and (
            w.kind == "power" or w.dimension == 1):
        beta = w.beta[0]
        n = w.dimension
        for key, verdict in (
                ("A_p[w]", power_membership(beta, A(p), n)),
                ("RH_{q/p}[w]", power_membership(beta, RH(q / p), n)),
                ("A_{p,q}[w^{1/p}]", power_membership(beta, ("Apq_root", p, q), n))):
            analytic[key] = {"member": verdict.member, "agrees": verdict.member == fin[key]}
    return EquivalenceReport(p, q, est, checks, analytic)


# ---------------------------------------------------------------------------
# doubling
# ---------------------------------------------------------------------------

@dataclass
class DoublingReport:
    D: float
    RD: float
    family: dict

    def to_json(self):
        return {"D": self.D, "RD": self.RD, "family": self.family}


def doubling_report(w, family, resolution=64):
    """Doubling constant over cube pairs (Q, 2Q) and reverse-doubling exponent
    over ball pairs (B(x, r), B(x, 2r)) with ``x`` the cube centres and
    ``r`` half the side."""
    lower = family.centers - family.sides[:, None] / 2
    upper = family.centers + family.sides[:, None] / 2
    wq = cube_integrals(w, lower, upper)
    w2q = cube_integrals(w, family.centers - family.sides[:, None],
                         family.centers + family.sides[:, None])
    D = float(np.max(w2q / wq))
    rd = math.inf
    for c, s in zip(family.centers, family.sides):
        b1 = ball_measure(w, c, s / 2, resolution)
        b2 = ball_measure(w, c, s, resolution)
        rd = min(rd, math.log2(b2 / b1))
    return DoublingReport(D, float(rd), dict(family.descriptor))
