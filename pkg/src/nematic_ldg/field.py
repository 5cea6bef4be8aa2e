"""Box-domain grids, Q-tensor and director fields, discrete energies.

Conventions
-----------
* Nodes sit at ``origin + h * (i, j, k)``; the outermost node shell carries
  frozen Dirichlet data.
* The gradient energy is summed over axis-aligned edges with forward
  differences, ``sum w_e |dQ|^2 * h`` (equal to ``sum w_e |dQ/h|^2 h^3``),
  with trapezoid weights ``w_e`` across the edge direction, which makes it
  exact for linear fields. The bulk term is a rectangle rule over interior
  nodes.
* Node-centred diagnostics use the average of the squared forward and
  backward differences per axis (one-sided where a neighbour is missing).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import bulk
from . import qtensor as qt

INTERIOR = (slice(1, -1),) * 3


class DomainError(ValueError):
    """A ball or node set does not fit inside the computational box."""


@dataclass(frozen=True)
class Grid3:
    dims: tuple
    h: float
    origin: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) < 3:
            raise ValueError(f"grid needs at least 3 nodes per axis, got {self.dims}")
        if not self.h > 0:
            raise ValueError("grid spacing must be positive")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @classmethod
    def unit_box(cls, n):
        """``n^3`` nodes covering ``[0, 1]^3``."""
        return cls((n, n, n), 1.0 / (n - 1))

    @property
    def num_nodes(self):
        return int(np.prod(self.dims))

    @property
    def node_volume(self):
        return self.h**3

    @property
    def volume(self):
        """Measure of the node set, ``num_nodes * h^3``."""
        return self.num_nodes * self.h**3

    @property
    def upper(self):
        return tuple(o + self.h * (d - 1) for o, d in zip(self.origin, self.dims))

    def coordinates(self):
        axes = [o + self.h * np.arange(d) for o, d in zip(self.origin, self.dims)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def boundary_mask(self):
        mask = np.ones(self.dims, dtype=bool)
        mask[INTERIOR] = False
        return mask

    def boundary_distance(self):
        """Euclidean distance of every node to the box surface."""
        x = self.coordinates()
        lo = x - np.array(self.origin)
        hi = np.array(self.upper) - x
        return np.minimum(lo, hi).min(axis=-1)

    def center(self):
        return tuple(0.5 * (o + u) for o, u in zip(self.origin, self.upper))

    def cell_center_near_center(self):
        """Cell-centre point nearest to the box centre; never coincides with a node."""
        idx = [(d - 1) // 2 for d in self.dims]
        return tuple(o + self.h * (i + 0.5) for o, i in zip(self.origin, idx))


# --------------------------------------------------------------------------
# boundary director scenarios
# --------------------------------------------------------------------------

def director_constant(direction=(0.0, 0.0, 1.0)):
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    return lambda x: np.broadcast_to(d, np.shape(x)).copy()


def director_hedgehog(center):
    c = np.asarray(center, dtype=float)

    def n(x):
        v = np.asarray(x, dtype=float) - c
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    return n


def director_rotation(wavenumber=np.pi, axis=0):
    """Great-circle rotation ``(cos kx, sin kx, 0)`` along one coordinate."""

    def n(x):
        t = wavenumber * np.asarray(x, dtype=float)[..., axis]
        return np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=-1)

    return n


def scenario_director(name, grid):
    if name == "constant":
        return director_constant()
    if name == "hedgehog":
        return director_hedgehog(grid.cell_center_near_center())
    if name == "rotation":
        return director_rotation()
    raise ValueError(f"unknown boundary scenario {name!r}")


def _evaluate_director(grid, n_b):
    values = n_b(grid.coordinates()) if callable(n_b) else np.asarray(n_b, dtype=float)
    if values.shape != grid.dims + (3,):
        raise ValueError(f"director array must have shape {grid.dims + (3,)}")
    return values


# --------------------------------------------------------------------------
# fields
# --------------------------------------------------------------------------

@dataclass
class QField:
    """Q-tensor coefficients on every node, shape ``dims + (5,)``.

    ``boundary`` keeps the prescribed Dirichlet values (only its boundary
    shell is meaningful).
    """

    grid: Grid3
    values: np.ndarray
    boundary: np.ndarray = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.dims + (5,):
            raise ValueError(f"values must have shape {self.grid.dims + (5,)}")
        if self.boundary is None:
            self.boundary = self.values.copy()

    def copy(self):
        return QField(self.grid, self.values.copy(), self.boundary)

    def with_values(self, values):
        return QField(self.grid, values, self.boundary)

    def boundary_intact(self):
        mask = self.grid.boundary_mask()
        return np.array_equal(self.values[mask], self.boundary[mask])

    def norms(self):
        return qt.norm(self.values)


@dataclass
class DirectorField:
    grid: Grid3
    values: np.ndarray
    boundary: np.ndarray = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.dims + (3,):
            raise ValueError(f"values must have shape {self.grid.dims + (3,)}")
        if self.boundary is None:
            self.boundary = self.values.copy()

    def copy(self):
        return DirectorField(self.grid, self.values.copy(), self.boundary)

    def boundary_intact(self):
        mask = self.grid.boundary_mask()
        return np.array_equal(self.values[mask], self.boundary[mask])


def boundary_from_director(grid, n_b, p):
    """Strong-anchoring data ``s_+ (n_b n_b - Id/3)`` on the boundary shell.

    ``n_b`` is a callable of node coordinates or an array over all nodes;
    only the boundary shell is read. Interior values are zero.
    """
    n = _evaluate_director(grid, n_b)
    mask = grid.boundary_mask()
    if np.any(np.abs(np.linalg.norm(n[mask], axis=-1) - 1.0) > 1e-10):
        raise ValueError("boundary director must have unit length at every boundary node")
    values = np.zeros(grid.dims + (5,))
    values[mask] = qt.from_uniaxial(np.full(mask.sum(), p.s_plus), n[mask])
    return QField(grid, values)


def director_field(grid, n_b, interior="harmonic", seed=0):
    """Director field with boundary values from ``n_b``.

    ``interior`` is ``"harmonic"`` (normalised componentwise harmonic
    extension), ``"random"`` (uniform on the sphere, seeded), ``"boundary"``
    (``n_b`` evaluated at interior nodes) or an explicit array.
    """
    n = _evaluate_director(grid, n_b).copy()
    mask = grid.boundary_mask()
    if np.any(np.abs(np.linalg.norm(n[mask], axis=-1) - 1.0) > 1e-10):
        raise ValueError("boundary director must have unit length at every boundary node")
    if isinstance(interior, str):
        if interior == "harmonic":
            v = harmonic_extension(grid, n)[INTERIOR]
        elif interior == "random":
            v = np.random.default_rng(seed).normal(size=n[INTERIOR].shape)
        elif interior == "boundary":
            v = n[INTERIOR]
        else:
            raise ValueError(f"unknown interior initialisation {interior!r}")
    else:
        v = np.asarray(interior, dtype=float)[INTERIOR]
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    v = np.where(nv > 1e-12, v / np.where(nv > 1e-12, nv, 1.0), np.array([0.0, 0.0, 1.0]))
    n[INTERIOR] = v
    return DirectorField(grid, n)


def _interior_laplacian_matrix(shape):
    def second_diff(m):
        return sp.diags([np.ones(m - 1), -2 * np.ones(m), np.ones(m - 1)], [-1, 0, 1])

    nx, ny, nz = shape
    ix, iy, iz = sp.identity(nx), sp.identity(ny), sp.identity(nz)
    return (sp.kron(sp.kron(second_diff(nx), iy), iz)
            + sp.kron(sp.kron(ix, second_diff(ny)), iz)
            + sp.kron(sp.kron(ix, iy), second_diff(nz))).tocsc()


def harmonic_extension(grid, values):
    """Componentwise discrete harmonic extension of boundary-shell values."""
    values = np.asarray(values, dtype=float)
    inner = tuple(d - 2 for d in grid.dims)
    A = _interior_laplacian_matrix(inner)
    boundary_only = values.copy()
    boundary_only[INTERIOR] = 0.0
    # contribution of frozen neighbours to the 7-point stencil
    rhs = -(_neighbour_sum(boundary_only))
    lu = spla.splu(A)
    out = values.copy()
    for c in range(values.shape[-1]):
        out[INTERIOR + (c,)] = lu.solve(rhs[..., c].ravel()).reshape(inner)
    return out


# --------------------------------------------------------------------------
# discrete operators
# --------------------------------------------------------------------------

def _neighbour_sum(v):
    """Sum of the six axis neighbours at every interior node."""
    return (v[2:, 1:-1, 1:-1] + v[:-2, 1:-1, 1:-1]
            + v[1:-1, 2:, 1:-1] + v[1:-1, :-2, 1:-1]
            + v[1:-1, 1:-1, 2:] + v[1:-1, 1:-1, :-2])


def laplacian(values, h):
    """7-point Laplacian at interior nodes, shape ``(nx-2, ny-2, nz-2, k)``."""
    return (_neighbour_sum(values) - 6.0 * values[INTERIOR]) / h**2


def _edge_weights(shape, axis):
    """Trapezoid weights across the two directions transverse to ``axis``.

    Edges on a face count 1/2, edges on a box edge 1/4. Such edges join two
    boundary nodes only, so the weights never touch the interior gradient.
    """
    w = np.ones(shape)
    for other in range(3):
        if other == axis:
            continue
        idx = [slice(None)] * 3
        idx[other] = 0
        w[tuple(idx)] *= 0.5
        idx[other] = -1
        w[tuple(idx)] *= 0.5
    return w


def _edge_dot(a, b):
    """Weighted sum over axis edges of (forward diff of a) . (forward diff of b)."""
    total = 0.0
    for axis in range(3):
        prod = np.sum(np.diff(a, axis=axis) * np.diff(b, axis=axis), axis=-1)
        total += np.sum(prod * _edge_weights(prod.shape, axis))
    return float(total)


def gradient_sq_nodal(values, h):
    """Node-centred ``|grad|^2``: per axis, mean of squared forward/backward differences."""
    values = np.asarray(values, dtype=float)
    out = np.zeros(values.shape[:3])
    for axis in range(3):
        d2 = np.sum(np.diff(values, axis=axis) ** 2, axis=-1) / h**2
        fwd = np.zeros(values.shape[:3])
        bwd = np.zeros(values.shape[:3])
        count = np.zeros(values.shape[:3])
        lead = [slice(None)] * 3
        lead[axis] = slice(0, -1)
        trail = [slice(None)] * 3
        trail[axis] = slice(1, None)
        fwd[tuple(lead)] = d2
        bwd[tuple(trail)] = d2
        count[tuple(lead)] += 1
        count[tuple(trail)] += 1
        out += (fwd + bwd) / count
    return out


# --------------------------------------------------------------------------
# energies
# --------------------------------------------------------------------------

def elastic_energy(f, p):
    """``(L/2) sum_edges w_e |dQ|^2 h``."""
    return 0.5 * p.L * f.grid.h * _edge_dot(f.values, f.values)


def bulk_energy(f, p):
    """Rectangle rule for the shifted bulk potential over interior nodes."""
    return float(np.sum(bulk.f_bulk_shifted(f.values[INTERIOR], p))) * f.grid.h**3


def total_energy(f, p):
    return elastic_energy(f, p) + bulk_energy(f, p)


def el_residual(f, p):
    """``L * lap_h Q - bulk_gradient(Q)`` at interior nodes (zero on the boundary).

    Returns ``(max Frobenius norm, residual field)``.
    """
    v = f.values
    res = np.zeros_like(v)
    res[INTERIOR] = p.L * laplacian(v, f.grid.h) - bulk.bulk_gradient(v[INTERIOR], p)
    return float(np.max(qt.norm(res[INTERIOR]), initial=0.0)), res


def energy_gradient(f, p):
    """Exact gradient of :func:`total_energy` w.r.t. node coefficients.

    Equal to ``-h^3 * el_residual``; boundary entries are zero.
    """
    return -f.grid.h**3 * el_residual(f, p)[1]


def energy_change(f, new_values, p):
    """``total_energy(new) - total_energy(f)`` without catastrophic cancellation.

    Differences are formed edge by edge and node by node, so tiny descent
    steps near a minimiser are still resolved.
    """
    old = f.values
    new = np.asarray(new_values, dtype=float)
    h = f.grid.h
    delta = new - old
    d_el = 0.5 * p.L * h * _edge_dot(delta, new + old)

    A = qt.to_matrix(new[INTERIOR])
    B = qt.to_matrix(old[INTERIOR])
    D = qt.to_matrix(delta[INTERIOR])
    t2n = np.sum(new[INTERIOR] ** 2, axis=-1)
    t2o = np.sum(old[INTERIOR] ** 2, axis=-1)
    dt2 = np.sum(delta[INTERIOR] * (new[INTERIOR] + old[INTERIOR]), axis=-1)
    # tr(A^3) - tr(B^3) = tr(D (A^2 + AB + B^2)) for D = A - B
    dt3 = np.einsum("...ij,...ji->...", D, A @ A + A @ B + B @ B)
    d_bulk = -0.5 * p.a2 * dt2 - p.b2 / 3.0 * dt3 + 0.25 * p.c2 * dt2 * (t2n + t2o)
    return d_el + float(np.sum(d_bulk)) * h**3


def dirichlet_energy_director(d):
    """Discrete ``int |grad n|^2``: ``sum_edges w_e |dn|^2 h``."""
    return d.grid.h * _edge_dot(d.values, d.values)


def energy_density(f, p):
    """``e_L = |grad_h Q|^2 / 2 + f_B~(Q) / L`` at every node."""
    return (0.5 * gradient_sq_nodal(f.values, f.grid.h)
            + bulk.f_bulk_shifted(f.values, p) / p.L)


def _ball_mask(grid, center, radius):
    x = grid.coordinates()
    return np.linalg.norm(x - np.asarray(center, dtype=float), axis=-1) <= radius


def normalized_energy(f, p, center, radius, density=None):
    """``(1/r) * sum over nodes in the ball of e_L h^3``.

    The ball must stay at least one cell inside the box.
    """
    grid = f.grid
    c = np.asarray(center, dtype=float)
    lo = np.asarray(grid.origin) + grid.h
    hi = np.asarray(grid.upper) - grid.h
    if not radius > 0 or np.any(c - radius < lo - 1e-12) or np.any(c + radius > hi + 1e-12):
        raise DomainError(f"ball B({tuple(c)}, {radius}) is not one cell inside the box")
    e = energy_density(f, p) if density is None else density
    return float(np.sum(e[_ball_mask(grid, c, radius)])) * grid.h**3 / radius


def w12_distance(f, g):
    """Discrete ``W^{1,2}`` distance ``sqrt(sum |f-g|^2 h^3 + sum_edges w_e |d(f-g)|^2 h)``."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    diff = f.values - g.values
    h = f.grid.h
    return float(np.sqrt(np.sum(diff**2) * h**3 + _edge_dot(diff, diff) * h))
