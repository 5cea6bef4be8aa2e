"""Quartic Landau-de Gennes bulk potential and its lower bounds."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from . import qtensor as qt


@dataclass(frozen=True)
class MaterialParams:
    """Bulk constants ``a2, b2, c2`` and elastic constant ``L``, all positive."""

    a2: float
    b2: float
    c2: float
    L: float = 1.0

    def __post_init__(self):
        for name in ("a2", "b2", "c2", "L"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")

    @property
    def s_plus(self):
        return (self.b2 + np.sqrt(self.b2**2 + 24 * self.a2 * self.c2)) / (4 * self.c2)

    @property
    def s_minus(self):
        return (self.b2 - np.sqrt(self.b2**2 + 24 * self.a2 * self.c2)) / (4 * self.c2)

    @property
    def f_min(self):
        """Minimum of f_B over all Q-tensors, attained on the uniaxial s_+ states."""
        return uniaxial_bulk(self.s_plus, self)

    @property
    def q_norm_min(self):
        """``|Q|`` on the minimum manifold, ``sqrt(2/3) s_+``."""
        return np.sqrt(2.0 / 3.0) * self.s_plus

    def with_L(self, L):
        return MaterialParams(self.a2, self.b2, self.c2, L)


def derive_params(a2, b2, c2, L=1.0):
    return MaterialParams(float(a2), float(b2), float(c2), float(L))


def uniaxial_bulk(s, p):
    """f_B restricted to ``s (n n - Id/3)``: ``s^2 (-9a^2 - 2b^2 s + 3c^2 s^2) / 27``."""
    s = np.asarray(s, dtype=float)
    return s**2 * (-9 * p.a2 - 2 * p.b2 * s + 3 * p.c2 * s**2) / 27.0


def uniaxial_bulk_derivative(s, p):
    s = np.asarray(s, dtype=float)
    return (-18 * p.a2 * s - 6 * p.b2 * s**2 + 12 * p.c2 * s**3) / 27.0


def uniaxial_stationary_points(p):
    """Roots ``(0, s_+, s_-)`` of the derivative of the uniaxial restriction."""
    return np.array([0.0, p.s_plus, p.s_minus])


def f_bulk(q, p):
    tr2, tr3 = qt.trace_powers(q)
    return -0.5 * p.a2 * tr2 - p.b2 / 3.0 * tr3 + 0.25 * p.c2 * tr2**2


def f_bulk_shifted(q, p):
    """Nonnegative shifted potential ``f_B - min f_B``."""
    return f_bulk(q, p) - p.f_min


def bulk_gradient(q, p):
    """Right-hand side of the Euler-Lagrange equation.

    ``G = -a^2 Q - b^2 (Q^2 - tr(Q^2) Id/3) + c^2 tr(Q^2) Q``, which is also
    the gradient of f_B with respect to the basis coefficients.
    """
    q = np.asarray(q, dtype=float)
    M = qt.to_matrix(q)
    tr2 = np.sum(q * q, axis=-1)
    q2 = qt.from_matrix(M @ M)  # projection drops the tr(Q^2)/3 Id part
    return (-p.a2 + p.c2 * tr2)[..., None] * q - p.b2 * q2


def pure_s_part(s, p):
    """The r-independent part ``F(s)`` of the shifted potential in (s, r) form."""
    s = np.asarray(s, dtype=float)
    sp = p.s_plus
    return (-p.a2 / 3.0 * (s**2 - sp**2) - 2 * p.b2 / 27.0 * (s**3 - sp**3)
            + p.c2 / 9.0 * (s**4 - sp**4))


def pure_s_bound_constant(p):
    """Coefficient of ``(s_+ - s)^2`` bounding ``F(s)`` from below on ``[0, s_+]``."""
    return (p.c2 * p.s_plus**2 + 3 * p.a2) / 27.0


def _quadratic_coefficient(p):
    return (2.0 / 3.0 * p.c2 * p.s_plus**2 + p.a2) / 2.0


def bound_beta(q, p):
    """Lower bound of the shifted potential in terms of ``|Q|`` and beta.

    Holds on ``|Q| >= sqrt(2/3) s_+``; inside that sphere the cubic term of
    the expansion in ``|Q| - sqrt(2/3) s_+`` is negative and the bound fails.
    """
    qn = qt.norm(q)
    beta = qt.biaxiality(q)
    return (_quadratic_coefficient(p) * (qn - p.q_norm_min) ** 2
            + p.b2 / (6 * np.sqrt(6)) * beta * qn**3)


@lru_cache(maxsize=None)
def derive_tau():
    """Constant of the case (ii) (s, r) bound.

    ``eta = inf beta / (gamma^2 (1-gamma)^2)`` over ``gamma in (0, 1/2]`` is
    found numerically from assembled tensors; then
    ``tau = eta / (6 sqrt(6) * 2 sqrt(2))`` combines the beta term of
    :func:`bound_beta` with ``|Q|^3 >= s_+^3 / (2 sqrt(2))``.
    """
    n = np.array([0.0, 0.0, 1.0])
    m = np.array([1.0, 0.0, 0.0])

    def ratio(g):
        beta = qt.biaxiality(qt.from_sr(1.0, g, n, m))
        return float(beta / (g * g * (1 - g) ** 2))

    # beta is only resolved well above rounding for gamma >~ 1e-3
    g_lo = 1e-3
    res = minimize_scalar(ratio, bounds=(g_lo, 0.5), method="bounded",
                          options={"xatol": 1e-10})
    # the infimum sits at the gamma -> 0 end; Richardson step to the endpoint
    endpoint = 2 * ratio(g_lo) - ratio(2 * g_lo)
    eta = min(res.fun, endpoint)
    return eta / (6 * np.sqrt(6) * 2 * np.sqrt(2))


TAU = 0.1623787908625328  # value returned by derive_tau(); checked in the tests


def bound_sr(q, p):
    """Case-wise lower bound of the shifted potential from the (s, r) form.

    Returns ``(case, bound)`` with case labels ``"i"`` (0 <= r <= s/2,
    s <= s_+), ``"ii"`` (0 <= r <= s/2, s > s_+) and ``"iii"`` (s/2 <= r <= 0).
    """
    rep = qt.decompose_sr(q)
    s, r = rep.s, rep.r
    sp = p.s_plus
    a2, b2, c2 = p.a2, p.b2, p.c2
    negative = (s < 0) | ((s == 0) & (r < 0))
    case_i = ~negative & (s <= sp)

    b_i = ((sp - s) ** 2 * pure_s_bound_constant(p)
           + r * (s - r) / 9.0 * (3 * a2 + b2 * s - 2 * c2 * s**2)
           + 5 * b2 / 27.0 * r**2 * s)
    safe_s = np.where(s > 0.5 * sp, s, 1.0)  # only read where s > s_+
    b_ii = (_quadratic_coefficient(p)
            * np.minimum(2.0 / 3.0 * (s - sp) ** 2, (np.sqrt(3) * s - 2 * sp) ** 2 / 6.0)
            + TAU * b2 * sp**3 * r**2 * (s - r) ** 2 / safe_s**4)
    b_iii = -a2**2 / (4 * c2) - sp**3 / 3.0 * (b2 / 9.0 - c2 / 3.0 * sp)

    bound = np.where(negative, b_iii, np.where(case_i, b_i, b_ii))
    case = np.where(negative, "iii", np.where(case_i, "i", "ii"))
    return case, bound


def negative_case_identity(q, p):
    """Shifted potential of Q rebuilt from ``-Q`` plus the cubic correction.

    For ``s/2 <= r <= 0`` this reproduces ``f_bulk_shifted(q)`` exactly.
    """
    rep = qt.decompose_sr(q)
    s, r = np.abs(rep.s), np.abs(rep.r)
    return (f_bulk_shifted(-np.asarray(q), p)
            + 2 * p.b2 / 27.0 * (2 * s**3 + 2 * r**3 - 3 * s**2 * r - 3 * s * r**2))
