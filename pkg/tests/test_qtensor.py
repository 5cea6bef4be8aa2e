import numpy as np
import pytest
from hypothesis import given, settings

from nematic_ldg import qtensor as qt
from conftest import orthonormal_pairs, qtensors, random_q, unit_vectors

E = np.eye(3)


def test_basis_is_orthonormal():
    gram = np.einsum("aij,bij->ab", qt.BASIS, qt.BASIS)
    np.testing.assert_allclose(gram, np.eye(5), atol=1e-15)


@given(qtensors)
def test_matrix_is_symmetric_traceless(q):
    M = qt.to_matrix(q)
    assert np.max(np.abs(M - M.T)) <= 1e-14
    assert abs(np.trace(M)) <= 1e-14
    assert np.sum(q * q) == pytest.approx(np.trace(M @ M), rel=1e-13, abs=1e-300)
    np.testing.assert_allclose(qt.from_matrix(M), q, atol=1e-14)


def test_from_uniaxial_examples():
    np.testing.assert_array_equal(qt.from_uniaxial(0.0, E[1]), np.zeros(5))
    lam = qt.eigenvalues(qt.from_uniaxial(1.5, E[2]))
    np.testing.assert_allclose(lam, [1.0, -0.5, -0.5], atol=1e-14)
    tr2, tr3 = qt.trace_powers(qt.from_uniaxial(1.0, E[0]))
    assert tr2 == pytest.approx(2 / 3, rel=1e-14)
    assert tr3 == pytest.approx(2 / 9, rel=1e-14)


def test_from_uniaxial_rejects_non_unit_director():
    with pytest.raises(ValueError):
        qt.from_uniaxial(1.0, [1.0, 1.0, 0.0])


def test_trace_powers_examples():
    assert qt.trace_powers(np.zeros(5)) == (0.0, 0.0)
    tr2, tr3 = qt.trace_powers(qt.from_matrix(np.diag([1.0, 0.0, -1.0])))
    assert tr2 == pytest.approx(2.0, rel=1e-14)
    assert abs(tr3) < 1e-14


def test_trace_powers_against_matrix_powers(rng):
    q = random_q(rng, 1000)
    M = qt.to_matrix(q)
    tr2, tr3 = qt.trace_powers(q)
    np.testing.assert_allclose(tr2, np.trace(M @ M, axis1=-2, axis2=-1), rtol=1e-13)
    np.testing.assert_allclose(tr3, np.trace(M @ M @ M, axis1=-2, axis2=-1),
                               rtol=1e-12, atol=1e-14)
    tr4 = np.trace(M @ M @ M @ M, axis1=-2, axis2=-1)
    np.testing.assert_allclose(tr4, tr2**2 / 2, rtol=1e-12)


def test_eigenvalues_match_characteristic_polynomial_roots(rng):
    for q in random_q(rng, 200):
        M = qt.to_matrix(q)
        coeffs = np.poly(M)  # lam^3 + c1 lam^2 + c2 lam + c3
        roots = np.sort(np.roots(coeffs).real)[::-1]
        np.testing.assert_allclose(qt.eigenvalues(q), roots, atol=1e-10)


def test_eigenvalues_match_eigvalsh(rng):
    q = random_q(rng, 10000)
    ref = np.linalg.eigvalsh(qt.to_matrix(q))[..., ::-1]
    lam = qt.eigenvalues(q)
    np.testing.assert_allclose(lam, ref, atol=1e-13)
    assert np.max(np.abs(lam.sum(axis=-1))) <= 1e-12


@settings(max_examples=300)
@given(qtensors)
def test_eigen_reconstruction(q):
    es = qt.eigen(q)
    V, lam = es.eigenvectors, es.eigenvalues
    assert np.all(np.diff(lam) <= 0)
    np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-12)
    rec = V @ np.diag(lam) @ V.T
    assert np.linalg.norm(rec - qt.to_matrix(q)) <= 1e-11 * max(1.0, qt.norm(q))


def test_eigen_ties():
    es = qt.eigen(np.zeros(5))
    np.testing.assert_array_equal(es.eigenvalues, np.zeros(3))
    np.testing.assert_array_equal(es.eigenvectors, np.eye(3))
    es = qt.eigen(qt.from_uniaxial(1.5, E[2]))
    np.testing.assert_allclose(es.eigenvalues, [1.0, -0.5, -0.5], atol=1e-14)
    np.testing.assert_allclose(np.abs(es.eigenvectors[:, 0]), E[2], atol=1e-14)
    # deterministic: same input, same output
    again = qt.eigen(qt.from_uniaxial(1.5, E[2]))
    np.testing.assert_array_equal(es.eigenvectors, again.eigenvectors)


def test_eigen_near_ties(rng):
    n, m = orthonormal_pairs(rng, 2000)
    q = qt.from_sr(np.ones(2000), 10.0 ** rng.uniform(-12, -3, 2000), n, m)
    es = qt.eigen(q)
    V = es.eigenvectors
    rec = np.einsum("...ik,...k,...jk->...ij", V, es.eigenvalues, V)
    assert np.max(np.linalg.norm(rec - qt.to_matrix(q), axis=(-2, -1))) <= 1e-11
    gram = np.einsum("...ki,...kj->...ij", V, V)
    assert np.max(np.abs(gram - np.eye(3))) <= 1e-12


def test_sr_example():
    s, r, region, ni, mi = qt.sr_from_eigenpair(-0.2, 0.5)
    assert (float(s), float(r)) == pytest.approx((0.8, 0.1), abs=1e-15)
    assert qt.REGIONS[int(region)] == "R1+"
    assert (int(ni), int(mi)) == (1, 0)


def test_every_eigenpair_has_a_region(rng):
    l1, l2 = rng.uniform(-2, 2, size=(2, 100000))
    s, r, region, _, _ = qt.sr_from_eigenpair(l1, l2)
    assert np.all(region >= 0)
    plus = (0 <= r + 1e-12) & (r <= s / 2 + 1e-12)
    minus = (s / 2 - 1e-12 <= r) & (r <= 1e-12)
    assert np.all(plus | minus)


def test_sr_reflection_symmetry(rng):
    l1, l2 = rng.uniform(-2, 2, size=(2, 10000))
    s, r, region, _, _ = qt.sr_from_eigenpair(l1, l2)
    s2, r2, region2, _, _ = qt.sr_from_eigenpair(-l1, -l2)
    np.testing.assert_allclose(s2, -s, atol=1e-15)
    np.testing.assert_allclose(r2, -r, atol=1e-15)
    np.testing.assert_array_equal(region2, (region + 6) % 12)


def test_decompose_sr(rng):
    q = random_q(rng, 20000)
    rep = qt.decompose_sr(q)
    assert np.max(np.abs(np.sum(rep.n * rep.m, axis=-1))) <= 1e-12
    ok = ((rep.r >= -1e-12) & (rep.r <= rep.s / 2 + 1e-12)) | (
        (rep.r >= rep.s / 2 - 1e-12) & (rep.r <= 1e-12))
    assert ok.all()
    rec = qt.from_sr(rep.s, rep.r, rep.n, rep.m)
    assert np.max(qt.norm(rec - q)) <= 1e-11


def test_decompose_sr_of_negated_tensor(rng):
    q = random_q(rng, 5000)
    a, b = qt.decompose_sr(q), qt.decompose_sr(-q)
    np.testing.assert_allclose(b.s, -a.s, atol=1e-12)
    np.testing.assert_allclose(b.r, -a.r, atol=1e-12)


def test_uniaxial_has_zero_r(rng):
    n = unit_vectors(rng, 100)
    rep = qt.decompose_sr(qt.from_uniaxial(rng.uniform(0.1, 2, 100), n))
    assert np.max(np.abs(rep.r)) <= 1e-12


def test_decompose_SR_examples():
    q = qt.from_matrix(np.diag([2 / 3, -0.7 / 3, -1.3 / 3]))
    rep = qt.decompose_SR(q)
    assert float(rep.S) == pytest.approx(1.0, abs=1e-12)
    assert float(rep.R) == pytest.approx(0.1, abs=1e-12)
    rep = qt.decompose_SR(qt.from_uniaxial(1.5, E[1]))
    assert (float(rep.S), float(rep.R)) == pytest.approx((1.5, 0.0), abs=1e-12)


@pytest.mark.parametrize("frame", ["leading", "sr"])
def test_decompose_SR_reconstruction(rng, frame):
    q = random_q(rng, 20000)
    rep = qt.decompose_SR(q, frame=frame)
    rec = qt.from_SR(rep.S, rep.R, rep.n, rep.m, rep.p)
    assert np.max(qt.norm(rec - q)) <= 1e-11


def test_SR_to_sr_conversion(rng):
    q = random_q(rng, 20000)
    sr = qt.decompose_sr(q)
    SR = qt.decompose_SR(q, frame="sr")
    np.testing.assert_allclose(sr.r, 2 * SR.R, atol=1e-10)
    np.testing.assert_allclose(sr.s, SR.S + SR.R, atol=1e-10)
    # the leading frame agrees whenever tr Q^3 >= 0
    lead = qt.decompose_SR(q)
    pos = qt.trace_powers(q)[1] >= 0
    np.testing.assert_allclose(lead.S[pos], SR.S[pos], atol=1e-12)


def test_biaxiality_examples():
    assert float(qt.biaxiality(qt.from_uniaxial(0.7, E[0]))) == pytest.approx(0, abs=1e-10)
    assert float(qt.biaxiality(qt.from_matrix(np.diag([0.5, 0.0, -0.5])))) == pytest.approx(1)
    q = qt.from_sr(1.0, 0.25, E[2], E[0])
    assert float(qt.biaxiality(q)) == pytest.approx(float(qt.biaxiality_of_ratio(0.25)),
                                                    rel=1e-12)
    assert float(qt.biaxiality_of_ratio(0.25)) == pytest.approx(0.44242, abs=1e-5)
    assert float(qt.biaxiality(np.zeros(5))) == 0.0


def test_biaxiality_poly_examples(rng):
    assert float(qt.biaxiality_poly(qt.from_sr(1.0, 0.5, E[2], E[0]))) == pytest.approx(0.125)
    n = unit_vectors(rng, 100)
    s = rng.uniform(-2, 2, 100)
    q = qt.from_uniaxial(s, n)
    assert np.all(np.abs(qt.biaxiality_poly(q)) <= 1e-12 * (1 + qt.norm(q) ** 6))
    q = random_q(rng, 1000, scale=1.0) + 0.1
    tr2, _ = qt.trace_powers(q)
    np.testing.assert_allclose(qt.biaxiality_poly(q), qt.biaxiality_unclamped(q) * tr2**3,
                               rtol=1e-10, atol=1e-14)


@given(qtensors)
def test_biaxiality_in_unit_interval(q):
    b = float(qt.biaxiality(q))
    assert 0.0 <= b <= 1.0


def test_biaxiality_poly_equals_sr_form(rng):
    q = random_q(rng, 10000)
    rep = qt.decompose_sr(q)
    rhs = 2 * rep.s**2 * rep.r**2 * (rep.s - rep.r) ** 2
    lhs = qt.biaxiality_poly(q)
    scale = qt.norm(q) ** 6 + 1e-300
    assert np.max(np.abs(lhs - rhs) / scale) <= 1e-9


def test_biaxiality_of_ratio_on_assembled_tensors(rng):
    g = rng.uniform(0, 0.5, 1000)
    n, m = orthonormal_pairs(rng, 1000)
    q = qt.from_sr(np.ones(1000), g, n, m)
    np.testing.assert_allclose(qt.biaxiality(q), qt.biaxiality_of_ratio(g), atol=1e-9)


class _P:
    s_plus = 1.5


def test_projection_examples():
    out = qt.project_to_uniaxial(qt.from_uniaxial(1.0, E[0]), _P)
    np.testing.assert_allclose(out, qt.from_uniaxial(1.5, E[0]), atol=1e-14)
    qmin = qt.from_uniaxial(1.5, np.array([0.6, 0.0, 0.8]))
    np.testing.assert_allclose(qt.project_to_uniaxial(qmin, _P), qmin, atol=1e-12)


def test_projection_beats_random_directions(rng):
    q = random_q(rng, 3000)
    rep = qt.decompose_SR(q)
    q = q[rep.S > 8 * np.abs(rep.R)][:200]
    proj = qt.project_to_uniaxial(q, _P)
    a = unit_vectors(rng, 2000)
    cands = qt.from_uniaxial(np.full(2000, 1.5), a)
    dist = np.linalg.norm(q[:, None, :] - cands[None, :, :], axis=-1).min(axis=1)
    assert np.all(qt.norm(q - proj) <= dist + 1e-12)


def test_projection_degenerate():
    q = qt.from_matrix(np.diag([0.5, 0.0, -0.5]))  # S = 0.75, R = 0.25
    with pytest.raises(qt.DegenerateProjectionError) as info:
        qt.project_to_uniaxial(q, _P)
    assert float(info.value.S) == pytest.approx(0.75)
    assert float(info.value.R) == pytest.approx(0.25)
