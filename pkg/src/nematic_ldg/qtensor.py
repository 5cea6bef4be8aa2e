"""Pointwise Q-tensor algebra.

A Q-tensor is a symmetric traceless 3x3 matrix. Throughout the package it is
stored as a length-5 coefficient vector in the orthonormal basis ``BASIS``::

    E1 = diag(-1, -1, 2) / sqrt(6)
    E2 = diag(1, -1, 0) / sqrt(2)
    E3 = (e1 e2^T + e2 e1^T) / sqrt(2)
    E4 = (e1 e3^T + e3 e1^T) / sqrt(2)
    E5 = (e2 e3^T + e3 e2^T) / sqrt(2)

so that ``tr(Ei Ej) = delta_ij`` and the coefficient 2-norm equals the
Frobenius norm ``|Q| = sqrt(tr Q^2)``. Every function accepts stacked input of
shape ``(..., 5)`` and broadcasts over the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_S2 = 1.0 / np.sqrt(2.0)
_S6 = 1.0 / np.sqrt(6.0)

BASIS = np.array(
    [
        [[-_S6, 0, 0], [0, -_S6, 0], [0, 0, 2 * _S6]],
        [[_S2, 0, 0], [0, -_S2, 0], [0, 0, 0]],
        [[0, _S2, 0], [_S2, 0, 0], [0, 0, 0]],
        [[0, 0, _S2], [0, 0, 0], [_S2, 0, 0]],
        [[0, 0, 0], [0, 0, _S2], [0, _S2, 0]],
    ]
)

EPS_Q = 1e-8  # below this |Q| the biaxiality parameter is defined as 0
TIE_TOL = 1e-12  # relative eigenvalue gap treated as an exact tie

REGIONS = ("R1+", "R2+", "R3+", "R4+", "R5+", "R6+",
           "R1-", "R2-", "R3-", "R4-", "R5-", "R6-")


def to_matrix(q):
    """Coefficients ``(..., 5)`` -> symmetric traceless matrices ``(..., 3, 3)``."""
    return np.einsum("...a,aij->...ij", np.asarray(q, dtype=float), BASIS)


def from_matrix(M):
    """Orthogonal projection of ``(..., 3, 3)`` matrices onto the Q-tensor basis.

    The antisymmetric part and the trace are discarded.
    """
    return np.einsum("...ij,aij->...a", np.asarray(M, dtype=float), BASIS)


def norm(q):
    return np.sqrt(np.sum(np.square(q), axis=-1))


def from_uniaxial(s, n):
    """``s (n n^T - Id/3)`` for unit vectors ``n``."""
    n = np.asarray(n, dtype=float)
    if np.any(np.abs(np.linalg.norm(n, axis=-1) - 1.0) > 1e-10):
        raise ValueError("director must have unit length")
    s = np.asarray(s, dtype=float)
    M = np.einsum("...i,...j->...ij", n, n)
    return s[..., None] * from_matrix(M)


def from_sr(s, r, n, m):
    """``s (n n^T - Id/3) + r (m m^T - Id/3)``; ``n`` and ``m`` orthonormal."""
    return from_uniaxial(s, n) + from_uniaxial(r, m)


def from_SR(S, R, n, m, p):
    """``S (n n^T - Id/3) + R (m m^T - p p^T)``."""
    m = np.asarray(m, dtype=float)
    p = np.asarray(p, dtype=float)
    mm = np.einsum("...i,...j->...ij", m, m)
    pp = np.einsum("...i,...j->...ij", p, p)
    return from_uniaxial(S, n) + np.asarray(R, dtype=float)[..., None] * from_matrix(mm - pp)


def trace_powers(q):
    """Return ``(tr Q^2, tr Q^3)``."""
    q = np.asarray(q, dtype=float)
    M = to_matrix(q)
    tr2 = np.sum(q * q, axis=-1)
    tr3 = np.einsum("...ij,...jk,...ki->...", M, M, M)
    return tr2, tr3


# --------------------------------------------------------------------------
# spectral decomposition
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues sorted descending and matching eigenvectors.

    ``eigenvectors[..., :, k]`` is the unit eigenvector of ``eigenvalues[..., k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _det3(M):
    return (M[..., 0, 0] * (M[..., 1, 1] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 1])
            - M[..., 0, 1] * (M[..., 1, 0] * M[..., 2, 2] - M[..., 1, 2] * M[..., 2, 0])
            + M[..., 0, 2] * (M[..., 1, 0] * M[..., 2, 1] - M[..., 1, 1] * M[..., 2, 0]))


def _normalize(v):
    nv = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(nv > 0, nv, 1.0)


def _fix_sign(v):
    # first component with non-negligible magnitude becomes positive
    idx = np.argmax(np.abs(v) > 1e-14, axis=-1)
    lead = np.take_along_axis(v, idx[..., None], axis=-1)
    return np.where(lead < 0, -v, v)


def _trig_eigenvalues(q):
    """Closed-form (trigonometric) eigenvalues, descending, one Newton polish.

    Accurate for a well separated eigenvalue; a nearly double pair is only
    resolved to about ``sqrt(eps) |Q|``.
    """
    M = to_matrix(q)
    tr2 = np.sum(q * q, axis=-1)
    det = _det3(M)
    p = np.sqrt(tr2 / 6.0)
    safe_p = np.where(p > 0, p, 1.0)
    half_det_b = np.clip(det / (2.0 * safe_p**3), -1.0, 1.0)
    phi = np.arccos(half_det_b) / 3.0
    l1 = 2.0 * p * np.cos(phi)
    l3 = 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)

    # characteristic polynomial lam^3 - (tr2/2) lam - det
    def polish(lam):
        f = lam**3 - 0.5 * tr2 * lam - det
        df = 3.0 * lam**2 - 0.5 * tr2
        ok = np.abs(df) > 1e-6 * np.maximum(tr2, 1e-300)
        return np.where(ok, lam - f / np.where(ok, df, 1.0), lam)

    l1 = polish(l1)
    l3 = polish(l3)
    return np.stack([l1, -l1 - l3, l3], axis=-1)


def eigenvalues(q):
    """Eigenvalues sorted descending (see :func:`eigen`)."""
    return eigen(q).eigenvalues


def eigen(q):
    """Spectral decomposition of Q-tensors.

    The input is rescaled by its largest coefficient. The better separated
    extreme eigenvalue comes from the trigonometric formula and its
    eigenvector from the best-conditioned cross product of rows of
    ``Q - lam I``. The remaining pair is resolved exactly by one Jacobi
    rotation of the 2x2 block in the orthogonal complement, which keeps
    nearly equal eigenvalues accurate. Exact ties keep the deterministic
    complement basis, and ``Q = 0`` returns the canonical basis. Each
    eigenvector is signed so that its first non-negligible component is
    positive.
    """
    q = np.asarray(q, dtype=float)
    shape = q.shape[:-1]
    qf = q.reshape(-1, 5)
    size = np.max(np.abs(qf), axis=-1, initial=0.0)
    zero = size == 0
    qf = qf / np.where(zero, 1.0, size)[:, None]
    M = to_matrix(qf)
    lam0 = _trig_eigenvalues(qf)

    top_isolated = (lam0[:, 0] - lam0[:, 1]) >= (lam0[:, 1] - lam0[:, 2])
    liso = np.where(top_isolated, lam0[:, 0], lam0[:, 2])
    A = M - liso[:, None, None] * np.eye(3)
    crosses = np.stack([np.cross(A[:, 0], A[:, 1]),
                        np.cross(A[:, 0], A[:, 2]),
                        np.cross(A[:, 1], A[:, 2])], axis=1)
    best = np.argmax(np.linalg.norm(crosses, axis=-1), axis=1)
    v = _normalize(crosses[np.arange(len(qf)), best])
    v = np.where(zero[:, None], np.array([1.0, 0.0, 0.0]), v)

    # deterministic orthonormal complement (u, w) of v
    k = np.argmin(np.abs(v), axis=-1)
    ek = np.eye(3)[k]
    u = _normalize(ek - np.sum(ek * v, axis=-1, keepdims=True) * v)
    w = np.cross(v, u)
    Mu = np.einsum("nij,nj->ni", M, u)
    Mw = np.einsum("nij,nj->ni", M, w)
    a = np.sum(u * Mu, axis=-1)
    b = np.sum(u * Mw, axis=-1)
    d = np.sum(w * Mw, axis=-1)
    tie = (np.abs(b) <= TIE_TOL) & (np.abs(a - d) <= TIE_TOL)
    theta = np.where(tie, 0.0, 0.5 * np.arctan2(2.0 * b, a - d))
    c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
    x_hi = c * u + s * w
    x_lo = -s * u + c * w
    mid = 0.5 * (a + d)
    rad = np.hypot(0.5 * (a - d), b)
    l_iso = np.einsum("ni,nij,nj->n", v, M, v)

    lam = np.where(top_isolated[:, None],
                   np.stack([l_iso, mid + rad, mid - rad], axis=-1),
                   np.stack([mid + rad, mid - rad, l_iso], axis=-1))
    vecs = np.where(top_isolated[:, None, None],
                    np.stack([v, x_hi, x_lo], axis=-1),
                    np.stack([x_hi, x_lo, v], axis=-1))
    order = np.argsort(-lam, axis=-1, kind="stable")
    lam = np.take_along_axis(lam, order, axis=-1)
    vecs = np.take_along_axis(vecs, order[:, None, :], axis=-1)
    vecs = np.where(zero[:, None, None], np.eye(3), vecs)
    vecs = np.swapaxes(_fix_sign(np.swapaxes(vecs, -1, -2)), -1, -2)
    lam = np.where(zero[:, None], 0.0, lam * size[:, None])
    return EigenSystem(lam.reshape(shape + (3,)), vecs.reshape(shape + (3, 3)))


# --------------------------------------------------------------------------
# representation formulas
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SRRep:
    """``Q = s (n n - Id/3) + r (m m - Id/3)`` with ``0<=r<=s/2`` or ``s/2<=r<=0``."""

    s: np.ndarray
    r: np.ndarray
    n: np.ndarray
    m: np.ndarray
    region: np.ndarray  # index into REGIONS


@dataclass(frozen=True)
class SRCapRep:
    """``Q = S (n n - Id/3) + R (m m - p p)``."""

    S: np.ndarray
    R: np.ndarray
    n: np.ndarray
    m: np.ndarray
    p: np.ndarray


# (membership test, r(l1, l2), s(l1, l2), eigen index for n, eigen index for m)
# indices 0, 1, 2 refer to the eigenvectors of l1, l2 and l3 = -l1 - l2
_PLUS_REGIONS = (
    (lambda a, b: (a <= 0) & (b >= -2 * a), lambda a, b: 2 * a + b, lambda a, b: 2 * b + a, 1, 0),
    (lambda a, b: (b <= 0) & (a >= -2 * b), lambda a, b: 2 * b + a, lambda a, b: 2 * a + b, 0, 1),
    (lambda a, b: (b <= 0) & (b >= a), lambda a, b: b - a, lambda a, b: -2 * a - b, 2, 1),
    (lambda a, b: (a <= 0) & (a >= b), lambda a, b: a - b, lambda a, b: -2 * b - a, 2, 0),
    (lambda a, b: (a <= 0) & (b >= -a) & (b <= -2 * a), lambda a, b: -2 * a - b, lambda a, b: b - a, 1, 2),
    (lambda a, b: (b <= 0) & (a >= -b) & (a <= -2 * b), lambda a, b: -2 * b - a, lambda a, b: a - b, 0, 2),
)


def sr_from_eigenpair(l1, l2):
    """Classify eigenvalue pairs into the twelve regions and apply their formulas.

    Returns ``(s, r, region, n_index, m_index)`` where the indices select which
    of the eigenvectors of ``(l1, l2, -l1-l2)`` play the roles of ``n`` and
    ``m``. Regions are tried in the order of ``REGIONS``; first match wins.
    The minus regions are the reflections ``(l1, l2) -> (-l1, -l2)`` of the
    plus regions with the same linear formulas.
    """
    l1 = np.asarray(l1, dtype=float)
    l2 = np.asarray(l2, dtype=float)
    s = np.full(l1.shape, np.nan)
    r = np.full(l1.shape, np.nan)
    region = np.full(l1.shape, -1, dtype=int)
    ni = np.zeros(l1.shape, dtype=int)
    mi = np.zeros(l1.shape, dtype=int)
    for sign, offset in ((1.0, 0), (-1.0, 6)):
        for k, (inside, rf, sf, nk, mk) in enumerate(_PLUS_REGIONS):
            hit = (region < 0) & inside(sign * l1, sign * l2)
            region = np.where(hit, offset + k, region)
            r = np.where(hit, rf(l1, l2), r)
            s = np.where(hit, sf(l1, l2), s)
            ni = np.where(hit, nk, ni)
            mi = np.where(hit, mk, mi)
    return s, r, region, ni, mi


def _pick(vectors, idx):
    return np.take_along_axis(vectors, idx[..., None, None], axis=-1)[..., 0]


def decompose_sr(q):
    """(s, r) representation with n, m eigenvectors of Q.

    The pair classified is the two largest eigenvalues of the descending
    spectrum. Region labels on shared boundaries depend on the precedence
    order only; ``(s, r)`` agree across adjacent regions there.
    """
    es = eigen(q)
    lam = es.eigenvalues
    s, r, region, ni, mi = sr_from_eigenpair(lam[..., 0], lam[..., 1])
    return SRRep(s=s, r=r, n=_pick(es.eigenvectors, ni), m=_pick(es.eigenvectors, mi),
                 region=region)


def decompose_SR(q, frame="leading"):
    """(S, R) representation ``S = 3 l_n / 2``, ``R = (2 l_m + l_n) / 2``.

    ``frame="leading"`` takes n, m, p as the eigenvectors of the descending
    eigenvalues (n is the leading eigenvector). ``frame="sr"`` uses the n and m
    chosen by :func:`decompose_sr`, in which case ``r = 2R`` and ``s = S + R``.
    The two frames coincide whenever ``tr Q^3 >= 0``.
    """
    es = eigen(q)
    lam = es.eigenvalues
    if frame == "leading":
        ni = np.zeros(lam.shape[:-1], dtype=int)
        mi = np.ones(lam.shape[:-1], dtype=int)
    elif frame == "sr":
        _, _, _, ni, mi = sr_from_eigenpair(lam[..., 0], lam[..., 1])
    else:
        raise ValueError(f"unknown frame {frame!r}")
    pi = 3 - ni - mi
    ln = np.take_along_axis(lam, ni[..., None], axis=-1)[..., 0]
    lm = np.take_along_axis(lam, mi[..., None], axis=-1)[..., 0]
    vecs = es.eigenvectors
    return SRCapRep(S=1.5 * ln, R=0.5 * (2.0 * lm + ln), n=_pick(vecs, ni),
                    m=_pick(vecs, mi), p=_pick(vecs, pi))


# --------------------------------------------------------------------------
# biaxiality
# --------------------------------------------------------------------------

def biaxiality_unclamped(q, eps=EPS_Q):
    tr2, tr3 = trace_powers(q)
    big = tr2 > eps * eps
    safe = np.where(big, tr2, 1.0)
    return np.where(big, 1.0 - 6.0 * tr3**2 / safe**3, 0.0)


def biaxiality(q, eps=EPS_Q):
    """``beta = 1 - 6 (tr Q^3)^2 / (tr Q^2)^3`` in [0, 1]; 0 for ``|Q| <= eps``."""
    return np.clip(biaxiality_unclamped(q, eps), 0.0, 1.0)


def biaxiality_poly(q):
    """Polynomial biaxiality ``(tr Q^2)^3 - 6 (tr Q^3)^2``; zero iff Q is uniaxial."""
    tr2, tr3 = trace_powers(q)
    return tr2**3 - 6.0 * tr3**2


def biaxiality_of_ratio(gamma):
    """beta as a function of ``gamma = r/s`` in [0, 1/2]."""
    g = np.asarray(gamma, dtype=float)
    return 27.0 * g**2 * (1.0 - g) ** 2 / (4.0 * (1.0 - g + g * g) ** 3)


# --------------------------------------------------------------------------
# projection onto the bulk minimum manifold
# --------------------------------------------------------------------------

class DegenerateProjectionError(ValueError):
    """Raised when ``S > 8|R|`` fails; carries the offending ``S`` and ``R``."""

    def __init__(self, S, R):
        self.S = np.asarray(S)
        self.R = np.asarray(R)
        super().__init__(f"projection gap condition S > 8|R| violated "
                         f"({np.size(self.S)} tensor(s), e.g. S={np.ravel(self.S)[0]:.6g}, "
                         f"R={np.ravel(self.R)[0]:.6g})")


def project_to_uniaxial(q, params):
    """Nearest point ``s_+ (n n - Id/3)`` with n the leading eigenvector.

    ``params`` only needs an ``s_plus`` attribute.
    """
    rep = decompose_SR(q, frame="leading")
    bad = ~(rep.S > 8.0 * np.abs(rep.R))
    if np.any(bad):
        raise DegenerateProjectionError(rep.S[bad] if np.ndim(rep.S) else rep.S,
                                        rep.R[bad] if np.ndim(rep.R) else rep.R)
    return from_uniaxial(np.full(np.shape(rep.S), params.s_plus), rep.n)
