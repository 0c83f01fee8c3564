"""
Functional calculus for lattice operators.

Every function of ``L = diag(m)^{-1} S`` is evaluated through one dense
eigendecomposition of the symmetrised matrix ``diag(m)^{-1/2} S diag(m)^{-1/2}
= V diag(lam) V^T``.  With the weighted modes ``W = diag(m)^{-1/2} V``,

    f(L) u = W f(lam) V^T diag(m)^{1/2} u,

and the integral kernel against ``dw`` is ``W f(lam) W^T``.

The Calderon route to ``L^{-alpha}`` instead sums heat applications over
log-spaced times; it only needs ``t -> e^{-tL} u`` and ``u -> L u`` and
therefore serves as an independent check of the spectral route.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy import special

__all__ = [
    "SpectralDecomposition",
    "SpectralFunction",
    "CalderonScheme",
    "decompose",
    "spectral_apply",
    "heat",
    "calderon_truncated",
    "calderon_inverse_power",
    "psi_calculus",
    "ZeroModeWarning",
    "TruncationWarning",
]


class ZeroModeWarning(UserWarning):
    """A nonzero component along the kernel of L was projected out."""


class TruncationWarning(UserWarning):
    """The Calderon truncation (delta, R) is too coarse for the spectrum."""


# ---------------------------------------------------------------------------
# decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenpairs of the symmetrised lattice operator.

    Attributes
    ----------
    eigenvalues : ndarray
        Sorted, nonnegative.
    vectors : ndarray
        Orthonormal columns ``V``.
    mass : ndarray
        Node masses ``m``.
    zero_modes : int
        Number of eigenvalues treated as exactly zero (periodic grids).
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    mass: np.ndarray
    bc: str = "dirichlet"
    zero_modes: int = 0
    grid: object = None
    meta: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.eigenvalues)

    @property
    def sqrt_mass(self):
        return np.sqrt(self.mass)

    @property
    def modes(self):
        """Weighted eigenfunctions ``W = diag(m)^{-1/2} V`` (orthonormal in ``<,>_w``)."""
        W = self.meta.get("_modes")
        if W is None:
            W = self.vectors / self.sqrt_mass[:, None]
            self.meta["_modes"] = W
        return W

    @property
    def lambda_min(self):
        """Smallest nonzero eigenvalue."""
        return float(self.eigenvalues[self.zero_modes])

    @property
    def lambda_max(self):
        return float(self.eigenvalues[-1])

    def coefficients(self, u):
        u = np.asarray(u)
        sm = self.sqrt_mass if u.ndim == 1 else self.sqrt_mass[:, None]
        return self.vectors.T @ (sm * u)

    def synthesize(self, c):
        return self.modes @ c

    def apply_values(self, fvals, u):
        c = self.coefficients(u)
        c = fvals * c if c.ndim == 1 else fvals[:, None] * c
        return self.synthesize(c)

    def apply_L(self, u):
        return self.apply_values(self.eigenvalues, u)

    def kernel(self, fvals, columns=None):
        """Kernel of ``f(L)`` against ``dw``; optionally only some columns."""
        W = self.modes
        right = W if columns is None else W[np.atleast_1d(columns)]
        return (W * fvals) @ right.T

    def check(self, symmetrized=None):
        """Residuals of the decomposition invariants."""
        V = self.vectors
        out = {"orthonormality": float(np.max(np.abs(V.T @ V - np.eye(self.size)))),
               "min_eigenvalue": float(self.eigenvalues[0])}
        if symmetrized is not None:
            R = (V * self.eigenvalues) @ V.T - symmetrized
            out["reconstruction"] = float(np.linalg.norm(R) / np.linalg.norm(symmetrized))
        return out


def decompose(op, zero_tol=1e-10):
    """Dense eigendecomposition of a :class:`~degenlab.lattice.DegenerateOperator`.

    Eigenvalues below ``zero_tol * lambda_max`` are set to zero on periodic
    grids (the constant mode); on Dirichlet grids they signal a fault.
    """
    A = op.symmetrized()
    try:
        lam, V = sla.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("eigensolver did not converge") from exc
    scale = max(abs(lam[-1]), 1.0)
    if lam[0] < -zero_tol * scale:
        raise RuntimeError(f"operator has a negative eigenvalue {lam[0]:.3e}")
    nz = 0
    if op.bc == "periodic":
        nz = int(np.sum(lam <= zero_tol * scale))
        lam = lam.copy()
        lam[:nz] = 0.0
        if nz == 1:
            # fix the sign of the constant mode
            V = V.copy()
            V[:, 0] *= np.sign(V[:, 0].sum()) or 1.0
    elif lam[0] <= zero_tol * scale:
        raise RuntimeError("Dirichlet operator is not positive definite")
    lam = np.maximum(lam, 0.0)
    return SpectralDecomposition(lam, V, op.mass.copy(), op.bc, nz, op.grid,
                                 {"coeff_bounds": op.coeff_bounds})


# ---------------------------------------------------------------------------
# spectral functions
# ---------------------------------------------------------------------------

def _regularized_q(order, x):
    return special.gammaincc(order, x)


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """A function on ``[0, inf)`` to be applied to the spectrum.

    ``singular_at_zero`` marks functions that are undefined at ``lambda = 0``
    (negative powers, ``psi``); ``bound`` is ``sup |f|`` when known.
    """

    kind: str
    params: dict
    fn: Callable
    bounded: bool = True
    bound: float | None = None
    singular_at_zero: bool = False

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return self.fn(lam)

    def __repr__(self):
        return f"SpectralFunction({self.kind}, {self.params})"

    def to_config(self):
        if self.kind == "custom":
            raise ValueError("custom spectral functions are not serialisable")
        return {"kind": self.kind, "params": dict(self.params)}

    @classmethod
    def from_config(cls, cfg):
        kind = cfg["kind"]
        params = dict(cfg.get("params", {}))
        factories = {"heat": cls.heat, "power": cls.power,
                     "heat_derivative": cls.heat_derivative, "psi": cls.psi,
                     "step4": cls.step4}
        if kind in factories:
            return factories[kind](**params)
        if kind == "bounded":
            return cls.bounded(**params)
        if kind in BOUNDED_LIBRARY:
            return cls.bounded(kind, **params)
        raise ValueError(f"unknown spectral function kind {kind!r}")

    # -- factories --------------------------------------------------------
    @classmethod
    def heat(cls, t):
        t = float(t)
        if t < 0:
            raise ValueError("heat time must be nonnegative")
        return cls("heat", {"t": t}, lambda lam: np.exp(-t * lam), True, 1.0)

    @classmethod
    def power(cls, beta):
        beta = float(beta)
        if beta > 0:
            return cls("power", {"beta": beta}, lambda lam: lam ** beta, False)
        if beta == 0:
            return cls("power", {"beta": 0.0}, np.ones_like, True, 1.0)
        return cls("power", {"beta": beta}, lambda lam: lam ** beta, False,
                   singular_at_zero=True)

    @classmethod
    def heat_derivative(cls, t, k=1):
        """``(t lam)^k e^{-t lam}``, bounded by ``(k/e)^k``."""
        t, k = float(t), int(k)
        if t < 0 or k < 0:
            raise ValueError("need t >= 0 and k >= 0")
        bound = 1.0 if k == 0 else (k / math.e) ** k
        return cls("heat_derivative", {"t": t, "k": k},
                   lambda lam: (t * lam) ** k * np.exp(-t * lam), True, bound)

    @classmethod
    def psi(cls, alpha, s=1.0):
        """``lam^{-alpha} e^{-s lam}``."""
        alpha, s = float(alpha), float(s)
        return cls("psi", {"alpha": alpha, "s": s},
                   lambda lam: lam ** (-alpha) * np.exp(-s * lam), False,
                   singular_at_zero=alpha > 0)

    @classmethod
    def step4(cls, ell, order=1):
        """``phi_ell(z) = int_{1/ell}^{ell} Phi(t z) dt/t`` with
        ``Phi(z) = z^N e^{-z} / Gamma(N)``, i.e. ``Q(N, z/ell) - Q(N, z ell)``.

        Tends to 1 pointwise on ``(0, inf)`` as ``ell -> inf``.
        """
        ell, order = float(ell), int(order)
        if ell < 1 or order < 1:
            raise ValueError("need ell >= 1 and order >= 1")
        return cls("step4", {"ell": ell, "order": order},
                   lambda lam: _regularized_q(order, lam / ell) - _regularized_q(order, lam * ell),
                   True, 1.0)

    @classmethod
    def bounded(cls, name, **params):
        """Member of the bounded library: ``one``, ``exp``, ``ratio``, ``step4``."""
        if name not in BOUNDED_LIBRARY:
            raise ValueError(f"unknown bounded function {name!r}")
        return BOUNDED_LIBRARY[name](**params)

    @classmethod
    def custom(cls, fn, bounded=False, bound=None, singular_at_zero=False, name="custom"):
        return cls("custom", {"name": name}, fn, bool(bounded), bound, singular_at_zero)


def _one():
    return SpectralFunction("one", {}, np.ones_like, True, 1.0)


def _exp(s=1.0):
    s = float(s)
    return SpectralFunction("exp", {"s": s}, lambda lam: np.exp(-s * lam), True, 1.0)


def _ratio(s=1.0):
    s = float(s)
    return SpectralFunction("ratio", {"s": s}, lambda lam: s * lam / (1 + s * lam), True, 1.0)


BOUNDED_LIBRARY = {"one": _one, "exp": _exp, "ratio": _ratio,
                   "step4": SpectralFunction.step4}


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------

def _zero_component(dec, u):
    if dec.zero_modes == 0:
        return 0.0
    c = dec.coefficients(u)[: dec.zero_modes]
    return float(np.linalg.norm(c))


def spectral_apply(dec, f, u, zero_mode="raise"):
    """Apply ``f(L)`` to ``u`` (a vector or an array of column vectors).

    Parameters
    ----------
    zero_mode : {"raise", "project"}
        What to do when ``f`` is singular at 0 and the spectrum contains 0.
        ``"project"`` removes the kernel component of ``u`` and warns with
        its size when that component is not negligible.
    """
    lam = dec.eigenvalues
    if f.singular_at_zero and dec.zero_modes:
        if zero_mode == "raise":
            raise ValueError(
                f"{f.kind} is undefined at lambda = 0; use zero_mode='project' or a "
                "Dirichlet grid")
        if zero_mode != "project":
            raise ValueError("zero_mode must be 'raise' or 'project'")
        comp = _zero_component(dec, u)
        scale = np.sqrt(np.sum(np.asarray(u) ** 2 * (dec.mass if np.ndim(u) == 1
                                                      else dec.mass[:, None])))
        if comp > 1e-12 * max(scale, 1e-300):
            warnings.warn(f"projected out a kernel component of size {comp:.3e}",
                          ZeroModeWarning, stacklevel=2)
        fvals = np.empty_like(lam)
        fvals[: dec.zero_modes] = 0.0
        fvals[dec.zero_modes:] = f(lam[dec.zero_modes:])
    else:
        fvals = f(lam)
    if not np.all(np.isfinite(fvals)):
        raise ValueError(f"{f!r} is not finite on the spectrum")
    return dec.apply_values(fvals, u)


def heat(dec, t, u):
    """``e^{-tL} u`` for ``t >= 0``."""
    if t < 0:
        raise ValueError("heat time must be nonnegative")
    return dec.apply_values(np.exp(-t * dec.eigenvalues), u)


# ---------------------------------------------------------------------------
# Calderon quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CalderonScheme:
    """Log-uniform trapezoid for ``(1/Gamma(a)) int_delta^R t^a e^{-tL} dt/t``.

    ``delta == R`` is allowed and gives the empty integral.
    """

    alpha: float
    delta: float
    R: float
    nodes: int = 400

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0 < self.delta <= self.R:
            raise ValueError("need 0 < delta <= R")
        if self.nodes < 2:
            raise ValueError("need at least two nodes")

    @classmethod
    def for_spectrum(cls, alpha, lam_min, lam_max, nodes=400):
        """``delta = 1e-3 / lam_max`` and ``R = 1e3 / lam_min``."""
        return cls(float(alpha), 1e-3 / lam_max, 1e3 / lam_min, int(nodes))

    @property
    def step(self):
        return math.log(self.R / self.delta) / (self.nodes - 1)

    def times(self):
        return np.geomspace(self.delta, self.R, self.nodes)

    def weights(self):
        """Trapezoid weights in ``s = log t``."""
        w = np.full(self.nodes, self.step)
        w[[0, -1]] *= 0.5
        return w

    def with_nodes(self, nodes):
        return CalderonScheme(self.alpha, self.delta, self.R, int(nodes))

    def scalar(self, lam):
        """The scheme applied to scalars; reference for the matrix version."""
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if self.delta == self.R:
            return np.zeros_like(lam)
        t = self.times()
        w = self.weights() * t ** self.alpha
        return np.exp(-np.outer(lam, t)) @ w / math.gamma(self.alpha)


def _heat_and_action(source, apply_L):
    """Normalise the Calderon source into ``(heat(t, u), L u)`` callables."""
    if isinstance(source, SpectralDecomposition):
        return (lambda t, u: heat(source, t, u)), (apply_L or source.apply_L)
    if callable(source):
        return source, apply_L
    raise TypeError("source must be a SpectralDecomposition or a heat callable")


def calderon_truncated(source, scheme, u):
    """Plain truncated operator ``T_{delta,R} u`` (no endpoint corrections)."""
    heat_fn, _ = _heat_and_action(source, None)
    u = np.asarray(u, dtype=float)
    if scheme.delta == scheme.R:
        return np.zeros_like(u)
    acc = np.zeros_like(u)
    for t, w in zip(scheme.times(), scheme.weights()):
        acc += w * t ** scheme.alpha * heat_fn(t, u)
    return acc / math.gamma(scheme.alpha)


def _near_zero_tail(alpha, delta, u, apply_L, max_terms=60, rtol=1e-17):
    """``int_0^delta t^{alpha-1} e^{-tL} u dt`` via the exponential series."""
    term_vec = np.array(u, dtype=float)
    total = delta ** alpha / alpha * term_vec
    unorm = np.max(np.abs(term_vec)) or 1.0
    for j in range(1, max_terms):
        term_vec = apply_L(term_vec)
        coef = (-1) ** j * delta ** (alpha + j) / (math.factorial(j) * (alpha + j))
        contrib = coef * term_vec
        total = total + contrib
        size = np.max(np.abs(contrib))
        if size > 1e8 * unorm:
            return None, j
        if size < rtol * unorm:
            return total, j
    return None, max_terms


def calderon_inverse_power(source, scheme, u, endpoint_correction=True, apply_L=None,
                           adaptive=True, tol=1e-8, max_nodes=12800, return_info=False,
                           lam_bounds=None):
    """``L^{-alpha} u`` from heat applications on a log-uniform grid.

    Parameters
    ----------
    source : SpectralDecomposition or callable
        Either a decomposition (its heat flow is used) or ``heat(t, u)``.
    scheme : CalderonScheme
    endpoint_correction : bool
        Add the analytic contribution of ``(0, delta)`` from the series
        ``sum_j (-1)^j delta^{alpha+j} L^j u / (j! (alpha+j))`` and the
        Euler-Maclaurin end terms of the trapezoid in ``log t``.  Both need
        only ``u -> L u``.
    adaptive : bool
        Double the node count until successive results differ by less than
        ``tol`` (relative, max norm).
    lam_bounds : (lam_min, lam_max), optional
        Used for the truncation warning; read from ``source`` when possible.

    Returns
    -------
    ndarray, or ``(ndarray, info)`` with ``return_info=True``.
    """
    heat_fn, L_fn = _heat_and_action(source, apply_L)
    u = np.asarray(u, dtype=float)
    if lam_bounds is None and isinstance(source, SpectralDecomposition):
        lam_bounds = (source.lambda_min, source.lambda_max)
    if lam_bounds is not None:
        lmin, lmax = lam_bounds
        if scheme.delta > 0.1 / lmax or scheme.R < 10 / lmin:
            warnings.warn("Calderon truncation dominates: delta > 0.1/lambda_max or "
                          "R < 10/lambda_min", TruncationWarning, stacklevel=2)
    info = {"nodes": scheme.nodes, "tail_terms": 0, "corrected": False}
    if scheme.delta == scheme.R:
        out = np.zeros_like(u)
        return (out, info) if return_info else out
    if endpoint_correction and L_fn is None:
        raise ValueError("endpoint correction needs the action u -> L u")

    a = scheme.alpha
    g = math.gamma(a)
    corr = np.zeros_like(u)
    if endpoint_correction:
        tail, terms = _near_zero_tail(a, scheme.delta, u, L_fn)
        info["tail_terms"] = terms
        if tail is not None:
            corr += tail
            # derivative of t^a e^{-tL} u in s = log t at both ends
            hd = heat_fn(scheme.delta, u)
            hR = heat_fn(scheme.R, u)
            dl = scheme.delta ** a * (a * hd - scheme.delta * L_fn(hd))
            dr = scheme.R ** a * (a * hR - scheme.R * L_fn(hR))
            info["corrected"] = True
            em = (dl - dr) / 12.0
        else:
            warnings.warn("near-zero series did not converge; endpoint correction skipped",
                          TruncationWarning, stacklevel=2)
            em = None
    else:
        em = None

    def evaluate(sch):
        acc = np.zeros_like(u)
        for t, w in zip(sch.times(), sch.weights()):
            acc += w * t ** a * heat_fn(t, u)
        if em is not None:
            acc += sch.step ** 2 * em
        return (acc + corr) / g

    cur = evaluate(scheme)
    nodes = scheme.nodes
    diff = math.nan
    if adaptive:
        while 2 * nodes - 1 <= max_nodes:
            nodes = 2 * nodes - 1  # keeps the previous nodes
            nxt = evaluate(scheme.with_nodes(nodes))
            diff = np.max(np.abs(nxt - cur)) / max(np.max(np.abs(nxt)), 1e-300)
            cur = nxt
            if diff < tol:
                break
        else:
            warnings.warn(f"node doubling stopped at {nodes} nodes with relative change "
                          f"{diff:.2e}", TruncationWarning)
    info["nodes"] = nodes
    info["change"] = float(diff)
    info["converged"] = bool(adaptive and diff < tol)
    return (cur, info) if return_info else cur


def psi_calculus(dec, alpha, phi, u, zero_mode="raise"):
    """``psi(L) u`` with ``psi(lam) = lam^{-alpha} phi(lam)`` for bounded ``phi``."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not phi.bounded:
        raise ValueError(f"{phi!r} is not bounded on [0, inf)")
    alpha = float(alpha)
    f = SpectralFunction("psi_phi", {"alpha": alpha, "phi": phi.to_config()
                                     if phi.kind != "custom" else "custom"},
                         lambda lam: lam ** (-alpha) * phi(lam), False,
                         singular_at_zero=True)
    return spectral_apply(dec, f, u, zero_mode=zero_mode)
