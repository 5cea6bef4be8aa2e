"""Vanishing-elastic-constant experiments.

:func:`run_sweep` solves the director problem once, lifts it to the limiting
uniaxial map ``Q0``, then minimises the Q-tensor energy for a decreasing
sequence of elastic constants and records how far each minimiser is from
``Q0`` on a compact set ``K`` that avoids the boundary and the defects.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from scipy import ndimage

from . import __version__
from . import bulk
from . import field as fld
from . import qtensor as qt
from . import solve
from .field import INTERIOR

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCENARIOS = ("constant", "rotation", "hedgehog")
RATE_METRICS = ("sup_K_bulk", "max_beta_K", "max_eig_err_sq_K", "sup_K_norm_dev")


class ConfigurationError(ValueError):
    pass


def geometric_L(L_max=0.1, ratio=0.5, count=8):
    return tuple(float(L_max * ratio**k) for k in range(count))


@dataclass
class SweepConfig:
    n: int = 24
    scenario: str = "hedgehog"
    a2: float = 1.0
    b2: float = 1.0
    c2: float = 1.0
    L_sequence: tuple = dc_field(default_factory=geometric_L)
    margin: float = 0.25
    lam: float = 0.5
    solver: solve.SolverOptions = dc_field(default_factory=solve.SolverOptions)
    warm_start: bool = True
    threads: int = 1
    collar_cells: int = 2

    def __post_init__(self):
        self.L_sequence = tuple(float(L) for L in self.L_sequence)
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"scenario must be one of {SCENARIOS}")
        if len(self.L_sequence) < 1 or any(L <= 0 for L in self.L_sequence):
            raise ConfigurationError("L_sequence must hold positive values")
        if any(b >= a for a, b in zip(self.L_sequence, self.L_sequence[1:])):
            raise ConfigurationError("L_sequence must be strictly decreasing")
        if self.margin < 2 * self.grid.h - 1e-12:
            raise ConfigurationError(f"margin {self.margin} is below two cells ({2 * self.grid.h})")
        if not 0 < self.lam < 1:
            raise ConfigurationError("biaxial threshold lam must lie in (0, 1)")
        self.params(self.L_sequence[0])  # validates a2, b2, c2

    @property
    def grid(self):
        return fld.Grid3.unit_box(self.n)

    def params(self, L):
        try:
            return bulk.MaterialParams(self.a2, self.b2, self.c2, L)
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from exc

    def to_dict(self):
        d = asdict(self)
        d["L_sequence"] = list(self.L_sequence)
        return d


@dataclass
class ConvergenceRecord:
    L: float
    energy: float
    elastic_energy: float
    energy_q0: float
    w12_dist_to_Q0: float
    sup_K_dist: float
    sup_K_bulk: float
    sup_K_norm_dev: float
    sup_boundary_collar_bulk: float
    max_beta_K: float
    max_eig_err_sq_K: float
    min_eig_gap_K: float
    omega_star_measure: float
    omega_lambda_measure: float
    boundary_normal_deriv_sq: float
    monotonicity_violation: float
    boundary_monotonicity: float
    mean_e_L: float
    bulk_over_L: float
    max_q_norm: float
    iterations: int
    converged: bool
    final_residual: float


@dataclass
class ConvergenceReport:
    records: list
    slopes: dict
    ratios: dict
    checks: dict
    reference_energy: float
    provenance: dict
    failed: bool = False
    fields: dict = dc_field(default=None, repr=False)  # L -> QField, not serialised
    limiting_field: object = dc_field(default=None, repr=False)
    compact_set: object = dc_field(default=None, repr=False)

    def to_dict(self):
        return {
            "schema_version": SCHEMA_VERSION,
            "records": [asdict(r) for r in self.records],
            "slopes": self.slopes,
            "ratios": self.ratios,
            "checks": self.checks,
            "reference_energy": self.reference_energy,
            "failed": self.failed,
            "provenance": self.provenance,
        }

    def to_json(self, **kw):
        return json.dumps(_jsonable(self.to_dict()), **kw)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


# --------------------------------------------------------------------------
# node sets
# --------------------------------------------------------------------------

def detect_singular_set(f, p, threshold=0.3, dilate=2):
    """Nodes with ``|Q| < threshold * sqrt(2/3) s_+``, dilated by ``dilate`` cells."""
    low = f.norms() < threshold * p.q_norm_min
    if dilate and low.any():
        low = ndimage.binary_dilation(low, iterations=dilate)
    return low


def _singular_distance(grid, singular_points=None, singular_mask=None):
    dist = np.full(grid.dims, np.inf)
    if singular_points is not None and len(singular_points):
        x = grid.coordinates()
        for c in np.atleast_2d(singular_points):
            dist = np.minimum(dist, np.linalg.norm(x - c, axis=-1))
    if singular_mask is not None and singular_mask.any():
        dist = np.minimum(dist, ndimage.distance_transform_edt(~singular_mask) * grid.h)
    return dist


def compact_set(f_ref, margin, params=None, singular_points=None):
    """Interior nodes at least ``margin`` from the boundary and from defects.

    Defects are ``singular_points`` when given, otherwise (if ``params`` is
    given) the low-``|Q|`` set of ``f_ref`` from :func:`detect_singular_set`.
    """
    grid = f_ref.grid
    if margin < 2 * grid.h - 1e-12:
        raise ConfigurationError(f"margin {margin} is below two cells")
    mask = None
    if singular_points is None and params is not None:
        mask = detect_singular_set(f_ref, params)
    far = _singular_distance(grid, singular_points, mask) >= margin
    K = (grid.boundary_distance() >= margin) & far
    K &= ~grid.boundary_mask()
    if not K.any():
        raise ConfigurationError(f"compact set is empty for margin {margin}")
    return K


def boundary_collar(grid, margin, singular_points=None, singular_mask=None):
    """Interior nodes closer than ``margin`` to the boundary and away from defects."""
    dist_b = grid.boundary_distance()
    far = _singular_distance(grid, singular_points, singular_mask) >= margin
    return (dist_b < margin) & far & ~grid.boundary_mask()


# --------------------------------------------------------------------------
# diagnostics
# --------------------------------------------------------------------------

def eigenvalue_errors(fL, f0, K):
    """``max_{x in K, i} |lam_i(Q_L) - lam_i(Q_0)|^2`` with descending eigenvalues."""
    if fL.grid != f0.grid:
        raise ValueError("fields live on different grids")
    lam_L = qt.eigenvalues(fL.values[K])
    lam_0 = qt.eigenvalues(f0.values[K])
    return float(np.max((lam_L - lam_0) ** 2, initial=0.0))


def eigenvalue_gap_map(f):
    """Smallest pairwise eigenvalue gap at every node (diagnostic only)."""
    lam = qt.eigenvalues(f.values)
    return np.minimum(lam[..., 0] - lam[..., 1], lam[..., 1] - lam[..., 2])


def region_measures(f, p, lam):
    """Measures of the low-order set and of the strongly biaxial ordered set."""
    if not 0 < lam < 1:
        raise ValueError("lam must lie in (0, 1)")
    qn = f.norms()
    half = 0.5 * p.q_norm_min
    beta = qt.biaxiality(f.values)
    cell = f.grid.h**3
    omega_star = float(np.count_nonzero(qn <= half)) * cell
    omega_lam = float(np.count_nonzero((qn >= half) & (beta > lam))) * cell
    return omega_star, omega_lam


def default_audit_balls(grid, center=None):
    """Five centres (one central, four offset in x and y) and four radii."""
    c0 = np.asarray(grid.center() if center is None else center, dtype=float)
    extent = min(u - o for o, u in zip(grid.origin, grid.upper))
    offset = 0.1 * extent
    centers = [c0] + [c0 + offset * e for e in
                      (np.array([1.0, 0, 0]), np.array([-1.0, 0, 0]),
                       np.array([0, 1.0, 0]), np.array([0, -1.0, 0]))]
    lo = np.asarray(grid.origin) + grid.h
    hi = np.asarray(grid.upper) - grid.h
    r_max = min(float(np.min(np.minimum(c - lo, hi - c))) for c in centers)
    radii = np.linspace(r_max / 4, r_max, 4)
    return centers, radii


def face_centers(grid):
    lo, hi, c = np.asarray(grid.origin), np.asarray(grid.upper), np.asarray(grid.center())
    points = []
    for axis in range(3):
        for end in (lo[axis], hi[axis]):
            x = c.copy()
            x[axis] = end
            points.append(x)
    return points


def monotonicity_audit(f, p, centers, radii):
    """Worst decrease of the normalised ball energy between consecutive radii.

    Nonnegative means monotone at every centre.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be increasing")
    e = fld.energy_density(f, p)
    worst = np.inf
    for c in centers:
        values = [fld.normalized_energy(f, p, c, r, density=e) for r in radii]
        worst = min(worst, float(np.min(np.diff(values))))
    return worst


def boundary_monotonicity(f, p, points, radii):
    """Worst difference quotient ``(E_R - E_r) / (R - r)`` on boundary half-balls.

    ``E_r`` is ``(1/r)`` times the energy in the part of ``B(x0, r)`` inside the
    box. The theoretical lower bound is an unknown constant, so the value is
    only reported.
    """
    grid = f.grid
    e = fld.energy_density(f, p)
    x = grid.coordinates()
    radii = np.asarray(radii, dtype=float)
    worst = np.inf
    for x0 in points:
        dist = np.linalg.norm(x - np.asarray(x0), axis=-1)
        E = [float(np.sum(e[dist <= r])) * grid.h**3 / r for r in radii]
        worst = min(worst, float(np.min(np.diff(E) / np.diff(radii))))
    return worst


def boundary_normal_energy(f, collar_cells=2):
    """``h^2 * sum |(Q_inner - Q_boundary) / h|^2`` over face nodes away from edges."""
    v = f.values
    h = f.grid.h
    c = collar_cells
    total = 0.0
    for axis in range(3):
        w = np.moveaxis(v, axis, 0)
        inner = (slice(c, -c if c else None),) * 2
        for outer, nxt in ((0, 1), (-1, -2)):
            d = (w[nxt] - w[outer])[inner] / h
            total += float(np.sum(d**2))
    return total * h**2


def fit_slope(L, values):
    """Least-squares slope of ``log(values)`` against ``log(L)``; NaN if undefined."""
    L = np.asarray(L, dtype=float)
    v = np.asarray(values, dtype=float)
    ok = (v > 0) & np.isfinite(v)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(L[ok]), np.log(v[ok]), 1)[0])


def stability_ratio(L, values):
    """Spread ``max/min`` of ``values / L``; 1.0 when all values are zero."""
    r = np.asarray(values, dtype=float) / np.asarray(L, dtype=float)
    if np.all(r == 0):
        return 1.0
    if np.any(r <= 0):
        return float("inf")
    return float(r.max() / r.min())


def nonincreasing(values, slack=0.1):
    v = np.asarray(values, dtype=float)
    return bool(np.all(v[1:] <= (1 + slack) * v[:-1] + 1e-300))


def bounded_uniformly(values, factor=3.0):
    """``max(values) <= factor * min_k median(values[:k+1])``."""
    v = np.asarray(values, dtype=float)
    running = [np.median(v[: k + 1]) for k in range(len(v))]
    return bool(v.max() <= factor * min(running))


# --------------------------------------------------------------------------
# the sweep
# --------------------------------------------------------------------------

def config_hash(cfg):
    text = json.dumps(_jsonable(cfg.to_dict()), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _solve_one(f_init, p, opts):
    return solve.minimize_q(f_init, p, opts)


def run_sweep(cfg):
    grid = cfg.grid
    n_b = fld.scenario_director(cfg.scenario, grid)
    p0 = cfg.params(cfg.L_sequence[0])

    d0 = fld.director_field(grid, n_b, interior="harmonic")
    director, d_report = solve.minimize_director(d0, cfg.solver)
    q0 = solve.limiting_map(director, p0)
    dirichlet = fld.dirichlet_energy_director(director)
    log.info("director solve: %d iterations, energy %.6g", d_report.iterations, dirichlet)

    fields, reports = {}, {}
    if cfg.warm_start:
        prev = None
        for L in cfg.L_sequence:
            p = cfg.params(L)
            start = q0
            if prev is not None and fld.total_energy(prev, p) <= fld.total_energy(q0, p):
                start = prev
            fields[L], reports[L] = _solve_one(start, p, cfg.solver)
            prev = fields[L]
            log.info("L=%.4g: %d iterations, energy %.8g, residual %.2e", L,
                     reports[L].iterations, reports[L].final_energy, reports[L].final_residual)
    else:
        with ThreadPoolExecutor(max_workers=max(1, cfg.threads)) as pool:
            results = list(pool.map(lambda L: _solve_one(q0, cfg.params(L), cfg.solver),
                                    cfg.L_sequence))
        for L, (f, r) in zip(cfg.L_sequence, results):
            fields[L], reports[L] = f, r

    singular_points = [grid.cell_center_near_center()] if cfg.scenario == "hedgehog" else None
    singular_mask = None
    if singular_points is None:
        singular_mask = detect_singular_set(fields[cfg.L_sequence[-1]], p0)
    K = compact_set(fields[cfg.L_sequence[-1]], cfg.margin,
                    params=None if singular_points is not None else p0,
                    singular_points=singular_points)
    collar = boundary_collar(grid, cfg.margin, singular_points, singular_mask)
    centers, radii = default_audit_balls(grid)
    faces = face_centers(grid)
    face_radii = np.linspace(cfg.margin / 4, cfg.margin, 4)

    records = []
    for L in cfg.L_sequence:
        p = cfg.params(L)
        f, rep = fields[L], reports[L]
        qn = f.norms()
        fb = bulk.f_bulk_shifted(f.values, p)
        e_L = fld.energy_density(f, p)
        om_star, om_lam = region_measures(f, p, cfg.lam)
        records.append(ConvergenceRecord(
            L=L,
            energy=fld.total_energy(f, p),
            elastic_energy=fld.elastic_energy(f, p),
            energy_q0=fld.total_energy(q0, p),
            w12_dist_to_Q0=fld.w12_distance(f, q0),
            sup_K_dist=float(np.max(qt.norm(f.values[K] - q0.values[K]))),
            sup_K_bulk=float(np.max(fb[K])),
            sup_K_norm_dev=float(np.max(np.abs(qn[K] - p.q_norm_min))),
            sup_boundary_collar_bulk=float(np.max(fb[collar], initial=0.0)),
            max_beta_K=float(np.max(qt.biaxiality(f.values[K]))),
            max_eig_err_sq_K=eigenvalue_errors(f, q0, K),
            min_eig_gap_K=float(np.min(eigenvalue_gap_map(f)[K])),
            omega_star_measure=om_star,
            omega_lambda_measure=om_lam,
            boundary_normal_deriv_sq=boundary_normal_energy(f, cfg.collar_cells),
            monotonicity_violation=monotonicity_audit(f, p, centers, radii),
            boundary_monotonicity=boundary_monotonicity(f, p, faces, face_radii),
            mean_e_L=float(np.mean(e_L[INTERIOR])),
            bulk_over_L=fld.bulk_energy(f, p) / L,
            max_q_norm=float(qn.max()),
            iterations=rep.iterations,
            converged=rep.converged,
            final_residual=rep.final_residual,
        ))

    failed = not all(r.converged for r in records) or not d_report.converged
    Ls = np.array(cfg.L_sequence)
    tail = Ls <= np.median(Ls)
    slopes = {}
    if not failed:
        for name in RATE_METRICS:
            vals = np.array([getattr(r, name) for r in records])
            slopes[name] = fit_slope(Ls[tail], vals[tail])
    last = slice(-4, None)
    ratios = {
        name: stability_ratio(Ls[last], [getattr(r, name) for r in records[last]])
        for name in ("max_eig_err_sq_K", "omega_star_measure", "omega_lambda_measure")
    }
    checks = {
        "sup_K_bulk_nonincreasing": nonincreasing([r.sup_K_bulk for r in records]),
        "sup_K_dist_nonincreasing": nonincreasing([r.sup_K_dist for r in records]),
        "w12_nonincreasing": nonincreasing([r.w12_dist_to_Q0 for r in records]),
        "boundary_normal_bounded": bounded_uniformly(
            [r.boundary_normal_deriv_sq for r in records]),
        "energy_chain": all(r.elastic_energy <= r.energy + 1e-10
                            and r.energy <= r.energy_q0 + 1e-10 for r in records),
        "director_converged": d_report.converged,
    }
    provenance = {
        "package": "nematic_ldg",
        "version": __version__,
        "config": cfg.to_dict(),
        "config_hash": config_hash(cfg),
        "warm_start": cfg.warm_start,
        "director_iterations": d_report.iterations,
        "compact_set_nodes": int(K.sum()),
    }
    return ConvergenceReport(records=records, slopes=slopes, ratios=ratios, checks=checks,
                             reference_energy=dirichlet, provenance=provenance,
                             failed=failed, fields=fields, limiting_field=q0, compact_set=K)
