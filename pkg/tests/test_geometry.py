"""Unit tests for the ellipsoid algebra and cone-duality machinery."""

import numpy as np
import pytest

from hybridinv.geometry import (DegenerateError, DualQuadraticCone, EllipsoidCQ,
                                EllipsoidQuad, GeometryError, InteriorPointError,
                                NotAnEllipsoid, SignatureError, cq_to_quad,
                                dual_quadratic, homogenize, householder,
                                image_membership, lifted_cone_matrix, project,
                                quad_to_cq, recover_primal)


def random_ellipsoid(rng, dim):
    A = rng.standard_normal((dim, dim))
    Q = A @ A.T + 0.3 * np.eye(dim)
    c = rng.standard_normal(dim)
    return EllipsoidCQ(Q=Q, c=c)


# ---------------------------------------------------------------------------
# representations and conversions (Lemma 8)


def test_quad_to_cq_unit_ball():
    e, lam = quad_to_cq(EllipsoidQuad(D=np.eye(2), d=np.zeros(2), delta=-1.0))
    assert lam == pytest.approx(1.0)
    assert np.allclose(e.Q, np.eye(2))
    assert np.allclose(e.c, 0.0)


def test_quad_to_cq_radius_two_ball():
    # x^T x - 4 <= 0 is the radius-2 ball: lambda = 4, Q = I/4.
    e, lam = quad_to_cq(EllipsoidQuad(D=np.eye(3), d=np.zeros(3), delta=-4.0))
    assert lam == pytest.approx(4.0)
    assert np.allclose(e.Q, np.eye(3) / 4.0)


def test_quad_to_cq_shifted():
    # (x - 1)^2 <= 1 in quadratic form: D = 1, d = -1, delta = 0.
    e, lam = quad_to_cq(EllipsoidQuad(D=np.eye(1), d=np.array([-1.0]), delta=0.0))
    assert lam == pytest.approx(1.0)
    assert e.c[0] == pytest.approx(1.0)


def test_quad_to_cq_rejects_indefinite():
    with pytest.raises(NotAnEllipsoid):
        quad_to_cq(EllipsoidQuad(D=np.diag([1.0, -1.0]), d=np.zeros(2), delta=-1.0))


def test_quad_to_cq_rejects_empty():
    # x^2 + 1 <= 0 has no solutions.
    with pytest.raises(NotAnEllipsoid):
        quad_to_cq(EllipsoidQuad(D=np.eye(1), d=np.zeros(1), delta=1.0))


def test_cq_to_quad_rejects_nonpositive_scale():
    e = EllipsoidCQ(Q=np.eye(2), c=np.zeros(2))
    with pytest.raises(GeometryError):
        cq_to_quad(e, 0.0)


def test_lemma8_round_trip_small():
    rng = np.random.default_rng(3)
    for _ in range(20):
        e = random_ellipsoid(rng, 3)
        lam = float(rng.uniform(0.1, 10.0))
        back, lam_back = quad_to_cq(cq_to_quad(e, lam))
        assert lam_back == pytest.approx(lam, rel=1e-9)
        assert np.allclose(back.Q, e.Q, rtol=1e-9, atol=1e-12)
        assert np.allclose(back.c, e.c, rtol=1e-9, atol=1e-12)


def test_value_agreement_between_forms():
    rng = np.random.default_rng(4)
    e = random_ellipsoid(rng, 2)
    q = cq_to_quad(e, 2.5)
    for _ in range(50):
        x = rng.standard_normal(2)
        # Both forms describe the same set: sign of (value - threshold) agrees.
        assert (e.value(x) <= 1.0) == (q.value(x) <= 0.0)


# ---------------------------------------------------------------------------
# basic EllipsoidCQ behavior


def test_ellipsoid_validation():
    with pytest.raises(GeometryError):
        EllipsoidCQ(Q=np.array([[1.0, 0.5], [0.0, 1.0]]), c=np.zeros(2))
    with pytest.raises(NotAnEllipsoid):
        EllipsoidCQ(Q=np.diag([1.0, 0.0]), c=np.zeros(2))
    with pytest.raises(GeometryError):
        EllipsoidCQ(Q=np.eye(2), c=np.zeros(3))


def test_support_function_vs_samples():
    rng = np.random.default_rng(5)
    e = random_ellipsoid(rng, 3)
    pts = e.boundary_points(2000, seed=1)
    for _ in range(10):
        a = rng.standard_normal(3)
        sampled = float(np.max(pts @ a))
        exact = e.support(a)
        assert sampled <= exact + 1e-9
        assert exact - sampled < 0.05 * (abs(exact) + 1.0)


def test_boundary_points_on_boundary_and_deterministic():
    rng = np.random.default_rng(6)
    e = random_ellipsoid(rng, 4)
    pts = e.boundary_points(100, seed=9)
    for x in pts:
        assert e.value(x) == pytest.approx(1.0, abs=1e-9)
    assert np.array_equal(pts, e.boundary_points(100, seed=9))


def test_cholesky_reconstructs_shape():
    rng = np.random.default_rng(7)
    e = random_ellipsoid(rng, 3)
    L = e.cholesky()
    assert np.allclose(L @ L.T, e.Q)


# ---------------------------------------------------------------------------
# homogenization and reflection


def test_homogenize_action():
    A = np.array([[1.0, 2.0], [0.0, 1.0]])
    c = np.array([3.0, -1.0])
    R = homogenize(A, c)
    x = np.array([0.5, 2.0])
    out = R @ np.append(x, 1.0)
    assert np.allclose(out[:2], A @ x + c)
    assert out[2] == 1.0


def test_homogenize_rejects_bad_offset():
    with pytest.raises(GeometryError):
        homogenize(np.eye(2), np.zeros(3))


def test_householder_maps_interior_to_axis():
    rng = np.random.default_rng(8)
    for _ in range(20):
        h = rng.standard_normal(3)
        H = householder(h)
        v = np.append(h, 1.0)
        out = H @ v
        assert np.allclose(out[:3], 0.0, atol=1e-12)
        assert out[3] == pytest.approx(np.linalg.norm(v))


def test_householder_symmetric_involution():
    rng = np.random.default_rng(9)
    for _ in range(20):
        H = householder(rng.standard_normal(4))
        assert np.allclose(H, H.T, atol=1e-12)
        assert np.allclose(H @ H, np.eye(5), atol=1e-12)


def test_householder_at_origin_is_signature_flip_free():
    # h = 0 lifts to e_{n+1} already, so the reflection is the identity.
    assert np.array_equal(householder(np.zeros(2)), np.eye(3))


# ---------------------------------------------------------------------------
# cone lift and duality


def test_lifted_cone_matrix_unit_ball():
    e = EllipsoidCQ(Q=np.eye(2), c=np.zeros(2))
    N = lifted_cone_matrix(e)
    assert np.allclose(N, np.diag([1.0, 1.0, -1.0]))


def test_lifted_cone_contains_lifted_ellipsoid():
    rng = np.random.default_rng(10)
    e = random_ellipsoid(rng, 3)
    N = lifted_cone_matrix(e)
    for x in e.boundary_points(100, seed=2):
        v = np.append(0.999 * (x - e.c) + e.c, 1.0)
        assert float(v @ N @ v) <= 1e-9


def test_dual_quadratic_unit_ball():
    e = EllipsoidCQ(Q=np.eye(2), c=np.zeros(2))
    cone, (D, d, delta) = dual_quadratic(e, np.zeros(2))
    assert np.allclose(cone.M, np.diag([1.0, 1.0, -1.0]))
    assert np.allclose(D, np.eye(2))
    assert np.allclose(d, 0.0)
    assert delta == pytest.approx(-1.0)


def test_dual_quadratic_radius_two_ball_normalization():
    # Radius-2 ball: the normalized reflected quadratic is (I, 0, -1/4).
    e = EllipsoidCQ(Q=np.eye(2) / 4.0, c=np.zeros(2))
    _, (D, d, delta) = dual_quadratic(e, np.zeros(2))
    assert np.allclose(D, np.eye(2))
    assert np.allclose(d, 0.0)
    assert delta == pytest.approx(-0.25)


def test_dual_quadratic_rejects_exterior_point():
    e = EllipsoidCQ(Q=np.eye(2), c=np.zeros(2))
    with pytest.raises(InteriorPointError):
        dual_quadratic(e, np.array([2.0, 0.0]))


def test_dual_cone_halfspace_characterization():
    # (-a, beta) is in the dual cone exactly when a.x <= beta holds on the set.
    rng = np.random.default_rng(11)
    e = random_ellipsoid(rng, 3)
    cone, _ = dual_quadratic(e, e.c)
    for _ in range(200):
        a = rng.standard_normal(3)
        beta = float(rng.normal(e.support(a), 1.0))
        y = np.append(-a, beta)
        contained = e.support(a) <= beta
        if abs(e.support(a) - beta) < 1e-8:
            continue
        # The quadratic locus is two-sided; the dual cone proper is the half
        # on the lifted-interior side, y . (h, 1) >= 0.
        in_cone = cone.contains(y, tol=1e-12) and beta - a @ e.c >= 0
        assert in_cone == contained


def test_recover_primal_round_trip():
    rng = np.random.default_rng(12)
    for _ in range(20):
        e = random_ellipsoid(rng, 3)
        cone, _ = dual_quadratic(e, e.c)
        back = recover_primal(cone)
        assert np.allclose(back.Q, e.Q, rtol=1e-7, atol=1e-9)
        assert np.allclose(back.c, e.c, rtol=1e-7, atol=1e-9)


def test_cone_signature_rejected_for_definite_matrix():
    with pytest.raises(SignatureError):
        DualQuadraticCone(M=np.eye(3))
    with pytest.raises(SignatureError):
        DualQuadraticCone(M=np.diag([1.0, -1.0, -1.0]))


def test_cone_signature_rejects_singular():
    with pytest.raises(SignatureError):
        DualQuadraticCone(M=np.diag([1.0, 0.0, -1.0]))


def test_recover_primal_degenerate():
    # One negative eigenvalue but the slice at z = 1 is not an ellipsoid.
    M = np.diag([1.0, 2.0, -1.0])
    W = np.linalg.inv(M)
    # Flip the corner so the recovered quadratic is empty.
    bad = DualQuadraticCone(M=np.diag([-1.0, 2.0, 3.0]))
    assert isinstance(W, np.ndarray)
    with pytest.raises(DegenerateError):
        recover_primal(bad)


# ---------------------------------------------------------------------------
# image membership and projection


def test_image_membership_identity():
    e = EllipsoidCQ(Q=np.diag([1.0, 4.0]), c=np.array([1.0, 0.0]))
    ok, value = image_membership(np.eye(2), e, np.array([1.0, 0.5]))
    assert ok and value == pytest.approx(e.value([1.0, 0.5]))
    ok, value = image_membership(np.eye(2), e, np.array([3.0, 0.0]))
    assert not ok and value == pytest.approx(4.0)


def test_image_membership_projection_row():
    # E = [1 0]: membership in the shadow of the ellipsoid on the first axis.
    e = EllipsoidCQ(Q=np.diag([1.0, 1.0]), c=np.zeros(2))
    ok, value = image_membership(np.array([[1.0, 0.0]]), e, np.array([0.5]))
    assert ok and value == pytest.approx(0.25)
    ok, _ = image_membership(np.array([[1.0, 0.0]]), e, np.array([1.5]))
    assert not ok


def test_image_membership_empty_rows():
    e = EllipsoidCQ(Q=np.eye(2), c=np.zeros(2))
    ok, value = image_membership(np.zeros((0, 2)), e, np.zeros(0))
    assert ok and value == 0.0


def test_image_membership_dimension_checks():
    e = EllipsoidCQ(Q=np.eye(2), c=np.zeros(2))
    with pytest.raises(GeometryError):
        image_membership(np.eye(3), e, np.zeros(3))
    with pytest.raises(GeometryError):
        image_membership(np.eye(2), e, np.zeros(3))


def test_project_axis_aligned():
    e = EllipsoidCQ(Q=np.diag([1.0, 4.0, 9.0]), c=np.array([1.0, 2.0, 3.0]))
    p = project(e, [0, 2])
    assert np.allclose(p.Q, np.diag([1.0, 9.0]))
    assert np.allclose(p.c, [1.0, 3.0])


def test_project_support_consistency():
    # The shadow's support in a direction equals the full set's support in
    # the embedded direction.
    rng = np.random.default_rng(13)
    e = random_ellipsoid(rng, 4)
    p = project(e, [1, 3])
    for _ in range(20):
        a2 = rng.standard_normal(2)
        a4 = np.zeros(4)
        a4[[1, 3]] = a2
        assert p.support(a2) == pytest.approx(e.support(a4), rel=1e-9)
