"""Energy minimisers for the Q-tensor energy and the Oseen-Frank director energy."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import field as fld
from . import qtensor as qt
from .field import INTERIOR

log = logging.getLogger(__name__)

STEP_RULES = ("fixed", "adaptive-curvature")


@dataclass
class SolverOptions:
    max_iters: int = 50000
    tol_residual: float | None = None  # None: 1e-8 * a2 * s_plus (director: 1e-8)
    step_rule: str = "adaptive-curvature"
    initial_step: float = 1.0  # multiple of the explicit stability step
    seed: int = 0
    log_every: int = 0
    truncate: bool = True  # final radial truncation of interior nodes to |Q| <= sqrt(2/3) s_+

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol_residual is not None and not self.tol_residual > 0:
            raise ValueError("tol_residual must be positive")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"step_rule must be one of {STEP_RULES}")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be positive")


@dataclass
class SolveReport:
    iterations: int
    final_energy: float
    final_residual: float
    converged: bool
    max_q_norm: float
    energy_trace: list = dc_field(default_factory=list)
    message: str = ""

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "final_energy": self.final_energy,
            "final_residual": self.final_residual,
            "converged": self.converged,
            "max_q_norm": self.max_q_norm,
            "energy_trace": [list(t) for t in self.energy_trace],
            "message": self.message,
        }


def default_tolerance(p):
    return 1e-8 * p.a2 * p.s_plus


def _descent(x0, energy, energy_change, gradient, residual, propose, base_step, opts, tol):
    """Shared loop: gradient steps with two-point (Barzilai-Borwein) step sizes.

    A trial point is accepted only if the energy does not increase; otherwise
    the step is halved. ``propose(x, g, step)`` returns the admissible trial
    point and the displacement used to evaluate the energy change.
    """
    x = x0
    g = gradient(x)
    res = residual(x, g)
    e = energy(x)
    trace = [(0, e)]
    step = base_step
    it = 0
    message = "converged"
    while res > tol:
        if it >= opts.max_iters:
            message = "max_iters reached"
            break
        it += 1
        accepted = False
        trial_step = step
        while trial_step >= 1e-14 * base_step:
            trial, delta = propose(x, g, trial_step)
            de = energy_change(x, trial, delta)
            if de <= 0.0:
                accepted = True
                break
            trial_step *= 0.5
        if not accepted:
            message = "step underflow without an accepted step"
            break
        g_new = gradient(trial)
        if opts.step_rule == "adaptive-curvature":
            s = trial - x
            y = g_new - g
            sy = float(np.sum(s * y))
            yy = float(np.sum(y * y))
            step = sy / yy if sy > 0 and yy > 0 else 2.0 * trial_step
            step = min(step, 1e6 * base_step)
        else:
            step = base_step
        x, g = trial, g_new
        e = e + de
        res = residual(x, g)
        if opts.log_every and it % opts.log_every == 0:
            trace.append((it, e))
            log.info("iter %d energy %.12g residual %.3e", it, e, res)
    if trace[-1][0] != it:
        trace.append((it, e))
    return x, it, res, res <= tol, trace, message


def truncate_interior(values, p):
    """Scale interior nodes with ``|Q| > sqrt(2/3) s_+`` back onto that sphere.

    The map is the nearest-point projection onto a ball, so it cannot lengthen
    any edge difference, and along every ray f_B is nondecreasing beyond the
    radius ``sqrt(2/3) s_+``. Hence it never increases the discrete energy.
    """
    inner = values[INTERIOR]
    qn = qt.norm(inner)
    over = qn > p.q_norm_min
    if np.any(over):
        inner[over] *= (p.q_norm_min / qn[over])[:, None]
        values[INTERIOR] = inner
    return values


def minimize_q(f0, p, opts=None):
    """Minimise the discrete Landau-de Gennes energy with frozen boundary values.

    Returns ``(field, report)``; the stopping metric is the max-norm of the
    Euler-Lagrange residual. With ``opts.truncate`` the converged field is
    radially truncated once (see :func:`truncate_interior`), so the output
    obeys the maximum principle exactly; the residual is then re-evaluated.
    Truncating only at the end leaves the descent path, and hence the
    branch reached when minimisers are not unique, untouched.
    """
    opts = opts or SolverOptions()
    tol = opts.tol_residual if opts.tol_residual is not None else default_tolerance(p)
    h = f0.grid.h
    qmax = max(float(np.max(qt.norm(f0.values))), p.q_norm_min)
    curvature = 12.0 * p.L / h**2 + p.a2 + 3.0 * p.c2 * qmax**2 + 2.0 * p.b2 * qmax
    base_step = opts.initial_step / (h**3 * curvature)

    def gradient(x):
        return fld.energy_gradient(f0.with_values(x), p)

    def residual(x, g):
        return float(np.max(qt.norm(g[INTERIOR]), initial=0.0)) / h**3

    def propose(x, g, step):
        return x - step * g, None

    x, it, res, ok, trace, message = _descent(
        f0.values.copy(),
        lambda x: fld.total_energy(f0.with_values(x), p),
        lambda x, y, _: fld.energy_change(f0.with_values(x), y, p),
        gradient, residual, propose, base_step, opts, tol)
    if opts.truncate:
        y = truncate_interior(x.copy(), p)
        if not np.array_equal(x, y):
            de = fld.energy_change(f0.with_values(x), y, p)
            x = y
            res = residual(x, gradient(x))
            ok = ok and res <= tol
            trace.append((it, trace[-1][1] + min(de, 0.0)))
    out = f0.with_values(x)
    report = SolveReport(iterations=it, final_energy=fld.total_energy(out, p),
                         final_residual=res, converged=ok,
                         max_q_norm=float(np.max(qt.norm(x))), energy_trace=trace,
                         message=message)
    return out, report


def _director_gradient(n, h):
    g = np.zeros_like(n)
    g[INTERIOR] = -2.0 * h**3 * fld.laplacian(n, h)
    return g


def _tangential(g, n):
    # projected twice: a single pass leaves a normal remainder of order
    # eps * |g|, which near defects swamps the tangential part
    g = g - np.sum(g * n, axis=-1, keepdims=True) * n
    return g - np.sum(g * n, axis=-1, keepdims=True) * n


def minimize_director(d0, opts=None):
    """Projected gradient descent for the discrete Dirichlet energy of unit vectors.

    Each step moves along the tangential gradient and renormalises nodewise.
    Stops when ``max |tangential part of lap_h n|`` drops below tolerance.
    """
    opts = opts or SolverOptions()
    tol = opts.tol_residual if opts.tol_residual is not None else 1e-8
    h = d0.grid.h
    base_step = opts.initial_step / (h**3 * 24.0 / h**2)

    def gradient(x):
        return _tangential(_director_gradient(x, h), x)

    def residual(x, g):
        return float(np.max(np.linalg.norm(g[INTERIOR], axis=-1), initial=0.0)) / (2.0 * h**3)

    def propose(x, g, step):
        # for tangential g and |x| = 1, normalize(x - step g) - x equals
        # (-step g - c x) / nu with nu = sqrt(1 + step^2 |g|^2), c = nu - 1
        a2 = step**2 * np.sum(g * g, axis=-1, keepdims=True)
        nu = np.sqrt(1.0 + a2)
        delta = (-step * g - (a2 / (1.0 + nu)) * x) / nu
        trial = x - step * g
        v = trial[INTERIOR]
        trial[INTERIOR] = v / np.linalg.norm(v, axis=-1, keepdims=True)
        return trial, delta

    def change(x, y, delta):
        return h * fld._edge_dot(delta, 2.0 * x + delta)

    x, it, res, ok, trace, message = _descent(
        d0.values.copy(), lambda x: h * fld._edge_dot(x, x), change,
        gradient, residual, propose, base_step, opts, tol)
    out = fld.DirectorField(d0.grid, x, d0.boundary)
    report = SolveReport(iterations=it, final_energy=fld.dirichlet_energy_director(out),
                         final_residual=res, converged=ok, max_q_norm=float("nan"),
                         energy_trace=trace, message=message)
    return out, report


def limiting_map(d, p):
    """Uniaxial lift ``s_+ (n n - Id/3)`` of a director field."""
    n = d.values
    values = qt.from_uniaxial(np.full(n.shape[:-1], p.s_plus), n)
    return fld.QField(d.grid, values)


def initial_q_field(grid, n_b, p):
    """Default start: limiting map of the normalised harmonic extension of ``n_b``."""
    d = fld.director_field(grid, n_b, interior="harmonic")
    f = limiting_map(d, p)
    return fld.QField(grid, f.values, fld.boundary_from_director(grid, n_b, p).boundary)
