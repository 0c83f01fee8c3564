"""
Cell-centred lattices and the finite-volume degenerate Laplacian.

For a weight ``w`` and optional real coefficient ``a`` the operator

    (S u)_i = sum_{faces f of cell i} c_f (u_i - u_{nb(f)}),
    c_f = a_f * w_f * h^(n-2),

is assembled as a symmetric sparse matrix, and the lattice operator is
``L = diag(m)^{-1} S`` with node masses ``m_i = w(x_i) h^n``.  ``L`` is
self-adjoint in ``<u, v>_w = sum_i u_i v_i m_i`` by construction.

The face weight ``w_f`` is the mean of ``w`` over the dual cell of side
``h`` centred on the face.  For smooth weights this agrees with the
midpoint value to second order; for ``|x|^beta`` on even grids the face
through the origin would otherwise sample the singularity.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .weights import Weight, cube_integrals

__all__ = [
    "Grid",
    "DegenerateOperator",
    "build_grid",
    "assemble",
    "weighted_inner",
    "export_coo",
    "load_coo",
]

BOUNDARY_CONDITIONS = ("dirichlet", "periodic")


@dataclass(frozen=True)
class Grid:
    """Cell-centred grid on ``[-X, X]^n`` with ``N`` points per axis.

    Nodes are ``x_i = -X + (i + 1/2) h`` with ``h = 2X/N``; multi-indices
    are flattened in C order (last axis fastest).
    """

    dimension: int
    extent: float
    points: int
    bc: str = "dirichlet"

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("only one- and two-dimensional lattices are supported")
        if not self.extent > 0:
            raise ValueError("extent X must be positive")
        if self.points < 8 or self.points % 2:
            raise ValueError("N must be even and at least 8 (odd N puts a node at the origin)")
        if self.bc not in BOUNDARY_CONDITIONS:
            raise ValueError(f"boundary condition must be one of {BOUNDARY_CONDITIONS}")

    @property
    def h(self):
        return 2 * self.extent / self.points

    @property
    def shape(self):
        return (self.points,) * self.dimension

    @property
    def size(self):
        return self.points ** self.dimension

    @property
    def axis(self):
        return -self.extent + (np.arange(self.points) + 0.5) * self.h

    @property
    def nodes(self):
        """Node coordinates, shape ``(size, n)``."""
        ax = self.axis
        mesh = np.meshgrid(*[ax] * self.dimension, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)

    @property
    def cell_volume(self):
        return self.h ** self.dimension

    def refine(self, factor=2):
        return Grid(self.dimension, self.extent, self.points * factor, self.bc)

    def extend(self, factor=2):
        """Same spacing on a domain ``factor`` times larger."""
        return Grid(self.dimension, self.extent * factor, self.points * factor, self.bc)

    def to_config(self):
        return {"dim": self.dimension, "extent": self.extent, "points": self.points,
                "bc": self.bc}

    def distances(self, j):
        """Euclidean (or periodic) distance from node ``j`` to every node."""
        d = self.nodes - self.nodes[j]
        if self.bc == "periodic":
            L = 2 * self.extent
            d = d - L * np.round(d / L)
        return np.linalg.norm(d, axis=1)


def build_grid(n, X, N, bc="dirichlet"):
    return Grid(int(n), float(X), int(N), str(bc).lower())


@dataclass(frozen=True, eq=False)
class DegenerateOperator:
    """Assembled lattice operator ``L = diag(m)^{-1} S``.

    Attributes
    ----------
    faces : ndarray, shape (F, 2)
        Node pairs sharing an interior (or wrap-around) face.
    face_weights : ndarray, shape (F,)
        Conductances ``c_f`` of those faces.
    boundary_nodes, boundary_weights : ndarray
        Dirichlet faces on the outer boundary, one diagonal entry each.
    """

    grid: Grid
    weight: Weight
    node_weights: np.ndarray
    mass: np.ndarray
    faces: np.ndarray
    face_weights: np.ndarray
    boundary_nodes: np.ndarray
    boundary_weights: np.ndarray
    stiffness: sp.csr_matrix
    coeff_bounds: tuple = (1.0, 1.0)
    meta: dict = field(default_factory=dict)

    @property
    def size(self):
        return self.grid.size

    @property
    def bc(self):
        return self.grid.bc

    def apply(self, u):
        """``L u``; works on vectors and on column-stacked arrays."""
        u = np.asarray(u)
        Su = self.stiffness @ u
        return Su / (self.mass if u.ndim == 1 else self.mass[:, None])

    def form(self, u, v=None):
        """Energy form ``u^T S v`` (equal to ``<L u, v>_w``)."""
        v = u if v is None else v
        return float(np.asarray(u) @ (self.stiffness @ np.asarray(v)))

    def symmetrized(self):
        """Dense ``diag(m)^{-1/2} S diag(m)^{-1/2}``."""
        d = 1.0 / np.sqrt(self.mass)
        A = self.stiffness.toarray()
        A *= d[:, None]
        A *= d[None, :]
        return 0.5 * (A + A.T)

    def scaled(self, c):
        """Operator with every conductance multiplied by ``c > 0``."""
        if not c > 0:
            raise ValueError("scale factor must be positive")
        nu, M = self.coeff_bounds
        return DegenerateOperator(self.grid, self.weight, self.node_weights, self.mass,
                                  self.faces, c * self.face_weights, self.boundary_nodes,
                                  c * self.boundary_weights, (c * self.stiffness).tocsr(),
                                  (c * nu, c * M), dict(self.meta))


def _face_weight_means(weight, centers, h):
    """Mean of the weight over cubes of side ``h`` centred at ``centers``."""
    lower = centers - h / 2
    upper = centers + h / 2
    if weight.kind == "sampled":
        lo = weight.lower
        hi = weight.lower + weight.spacing * np.array(weight.values.shape)
        inside = np.all((lower >= lo - 1e-12) & (upper <= hi + 1e-12), axis=1)
        out = np.asarray(weight(np.clip(centers, lo, hi - 1e-12 * weight.spacing)), dtype=float)
        if np.any(inside):
            out[inside] = cube_integrals(weight, lower[inside], upper[inside]) / h ** len(lo)
        return out
    return cube_integrals(weight, lower, upper) / h ** centers.shape[1]


def _coefficient_values(coeff, points, axis):
    """Evaluate a scalar or per-axis (diagonal) coefficient at ``points``."""
    if coeff is None:
        return np.ones(len(points))
    c = coeff[axis] if isinstance(coeff, (tuple, list)) else coeff
    if callable(c):
        x = points[:, 0] if points.shape[1] == 1 else points
        vals = np.asarray(c(x), dtype=float)
        return np.broadcast_to(vals, (len(points),)).astype(float)
    return np.full(len(points), float(c))


def assemble(grid, weight, coeff=None, bounds=None):
    """Assemble the finite-volume operator for ``-div(a w grad)`` with mass ``w``.

    Parameters
    ----------
    grid : Grid
    weight : Weight
        Must have the same dimension as the grid.
    coeff : None, float, callable or tuple of those
        Real coefficient ``a``.  A tuple gives one entry per axis, i.e. a
        diagonal coefficient matrix.  Callables take node coordinates
        (shape ``(F,)`` in 1-D, ``(F, n)`` otherwise).
    bounds : (nu, M), optional
        Ellipticity bounds to enforce.  When omitted they are read off the
        sampled coefficient values.

    Returns
    -------
    DegenerateOperator
    """
    if weight.dimension != grid.dimension:
        raise ValueError("weight and grid dimensions differ")
    n, N, h = grid.dimension, grid.points, grid.h
    nodes = grid.nodes
    with np.errstate(divide="ignore"):
        wn = np.asarray(weight(nodes), dtype=float)
    if not np.all(np.isfinite(wn) & (wn > 0)):
        raise ValueError("weight must be positive and finite at every node")
    mass = wn * h ** n

    idx = np.arange(grid.size).reshape(grid.shape)
    faces, cond, bnodes, bcond, avals = [], [], [], [], []
    for ax in range(n):
        e = np.zeros(n)
        e[ax] = h / 2
        left = np.take(idx, np.arange(N - 1), axis=ax).ravel()
        right = np.take(idx, np.arange(1, N), axis=ax).ravel()
        pairs = [(left, right, nodes[left] + e)]
        last = np.take(idx, [N - 1], axis=ax).ravel()
        first = np.take(idx, [0], axis=ax).ravel()
        if grid.bc == "periodic":
            pairs.append((last, first, nodes[last] + e))
        for a_idx, b_idx, mid in pairs:
            a = _coefficient_values(coeff, mid, ax)
            avals.append(a)
            faces.append(np.stack([a_idx, b_idx], axis=1))
            cond.append(a * _face_weight_means(weight, mid, h) * h ** (n - 2))
        if grid.bc == "dirichlet":
            for b_idx, mid in ((first, nodes[first] - e), (last, nodes[last] + e)):
                a = _coefficient_values(coeff, mid, ax)
                avals.append(a)
                bnodes.append(b_idx)
                bcond.append(a * _face_weight_means(weight, mid, h) * h ** (n - 2))

    allvals = np.concatenate(avals)
    if bounds is None:
        nu, M = float(allvals.min()), float(allvals.max())
    else:
        nu, M = map(float, bounds)
        if not 0 < nu <= M:
            raise ValueError("ellipticity bounds need 0 < nu <= M")
        if allvals.min() < nu * (1 - 1e-12) or allvals.max() > M * (1 + 1e-12):
            raise ValueError("coefficient violates the ellipticity bounds")
    if not nu > 0:
        raise ValueError("coefficient must be strictly positive")

    faces = np.concatenate(faces) if faces else np.zeros((0, 2), int)
    cond = np.concatenate(cond) if cond else np.zeros(0)
    bnodes = np.concatenate(bnodes) if bnodes else np.zeros(0, int)
    bcond = np.concatenate(bcond) if bcond else np.zeros(0)
    if not (np.all(np.isfinite(cond)) and np.all(cond > 0)
            and np.all(np.isfinite(bcond)) and np.all(bcond > 0)):
        raise ValueError("face weights must be positive and finite")

    i, j = faces[:, 0], faces[:, 1]
    diag = np.bincount(i, cond, grid.size) + np.bincount(j, cond, grid.size)
    diag += np.bincount(bnodes, bcond, grid.size)
    rows = np.concatenate([i, j, np.arange(grid.size)])
    cols = np.concatenate([j, i, np.arange(grid.size)])
    vals = np.concatenate([-cond, -cond, diag])
    S = sp.coo_matrix((vals, (rows, cols)), shape=(grid.size, grid.size)).tocsr()
    S.sum_duplicates()
    meta = {"grid": grid.to_config(), "weight": weight.to_config(),
            "coefficient": coeff is not None}
    return DegenerateOperator(grid, weight, wn, mass, faces, cond, bnodes, bcond, S,
                              (nu, M), meta)


def weighted_inner(u, v, op):
    """``<u, v>_w = sum_i u_i v_i m_i``."""
    u = np.asarray(u)
    v = np.asarray(v)
    if u.shape[0] != op.size or v.shape[0] != op.size:
        raise ValueError("grid function length does not match the operator grid")
    return float(np.sum(u * v * op.mass))


def export_coo(op, path):
    """Write the stiffness matrix and masses as plain ``i j value`` text."""
    S = op.stiffness.tocoo()
    with open(path, "w") as fh:
        fh.write(f"# size {op.size} nnz {S.nnz}\n")
        for r, c, v in zip(S.row, S.col, S.data):
            fh.write(f"{r} {c} {float(v)!r}\n")
        fh.write("# mass\n")
        for k, m in enumerate(op.mass):
            fh.write(f"{k} {k} {float(m)!r}\n")


def load_coo(path):
    """Read back ``(S, mass)`` written by :func:`export_coo`."""
    with open(path) as fh:
        header = fh.readline().split()
        size = int(header[2])
        rows, cols, vals, mass = [], [], [], np.zeros(size)
        target = "S"
        for line in fh:
            if line.startswith("# mass"):
                target = "m"
                continue
            r, c, v = line.split()
            if target == "S":
                rows.append(int(r))
                cols.append(int(c))
                vals.append(float(v))
            else:
                mass[int(r)] = float(v)
    S = sp.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsr()
    return S, mass
