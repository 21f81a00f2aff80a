import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from rodgp import se3

from conftest import random_pose, random_twist

rng = np.random.default_rng(0)


def twists(omega_bound=1.7):
    # |omega| <= sqrt(3) * bound stays inside the principal branch for
    # bound = 1.7 (2.95 < pi).
    coord = st.floats(-omega_bound, omega_bound, allow_nan=False)
    return st.tuples(*[coord] * 6).map(lambda t: np.array(t))


def test_hat3_vee3_roundtrip():
    v = np.array([0.3, -1.2, 2.5])
    V = se3.hat3(v)
    assert np.allclose(V, -V.T)
    np.testing.assert_array_equal(se3.vee3(V), v)


def test_hat3_is_cross_product():
    a = np.array([0.3, -1.2, 2.5])
    b = np.array([-0.7, 0.4, 1.1])
    np.testing.assert_allclose(se3.hat3(a) @ b, np.cross(a, b), atol=1e-15)


def test_vee3_rejects_non_skew():
    with pytest.raises(ValueError):
        se3.vee3(np.eye(3))


def test_hat6_layout():
    x = np.arange(1.0, 7.0)
    X = se3.hat6(x)
    np.testing.assert_array_equal(X[:3, 3], x[:3])
    np.testing.assert_array_equal(se3.vee3(X[:3, :3]), x[3:])
    np.testing.assert_array_equal(X[3], np.zeros(4))
    np.testing.assert_array_equal(se3.vee6(X), x)


def test_vee6_rejects_nonzero_bottom_row():
    X = se3.hat6(np.arange(1.0, 7.0))
    X[3, 0] = 1e-6
    with pytest.raises(ValueError):
        se3.vee6(X)


def test_curly_hat_layout():
    x = np.arange(1.0, 7.0)
    X = se3.curly_hat(x)
    W = se3.hat3(x[3:])
    np.testing.assert_array_equal(X[:3, :3], W)
    np.testing.assert_array_equal(X[3:, 3:], W)
    np.testing.assert_array_equal(X[:3, 3:], se3.hat3(x[:3]))
    np.testing.assert_array_equal(X[3:, :3], np.zeros((3, 3)))


def test_exp_so3_matches_matrix_exponential():
    for _ in range(50):
        w = rng.uniform(-1.5, 1.5, 3)
        np.testing.assert_allclose(
            se3.exp_so3(w), scipy.linalg.expm(se3.hat3(w)), atol=1e-12
        )


def test_exp_se3_matches_matrix_exponential():
    for _ in range(50):
        x = random_twist(rng, 2.0, 1.5)
        np.testing.assert_allclose(
            se3.exp_se3(x), scipy.linalg.expm(se3.hat6(x)), atol=1e-12
        )


def test_exp_translation_uses_rotation_jacobian():
    x = np.array([0.4, -0.2, 0.9, 0.3, 1.1, -0.5])
    T = se3.exp_se3(x)
    np.testing.assert_allclose(T[:3, 3], se3.jac_so3(x[3:]) @ x[:3], atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(twists())
def test_log_exp_roundtrip(x):
    np.testing.assert_allclose(se3.log_se3(se3.exp_se3(x)), x, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(twists(), twists())
def test_group_closure(x, y):
    T = se3.exp_se3(x) @ se3.exp_se3(y)
    se3.check_pose(T)
    se3.check_pose(se3.pose_inverse(T))
    np.testing.assert_allclose(se3.pose_inverse(T) @ T, np.eye(4), atol=1e-12)


def test_log_so3_small_angle():
    w = np.array([1e-10, -2e-10, 3e-10])
    np.testing.assert_allclose(se3.log_so3(se3.exp_so3(w)), w, atol=1e-15)


def test_log_so3_rejects_near_pi():
    C = se3.exp_so3((np.pi - 1e-8) * np.array([1.0, 0.0, 0.0]))
    with pytest.raises(ValueError):
        se3.log_so3(C)


def test_adjoint_of_exp_is_exp_of_curly():
    for _ in range(20):
        x = random_twist(rng, 1.5, 1.2)
        np.testing.assert_allclose(
            se3.adjoint(se3.exp_se3(x)),
            scipy.linalg.expm(se3.curly_hat(x)),
            atol=1e-10,
        )


def test_adjoint_homomorphism():
    for _ in range(50):
        Ta = random_pose(rng)
        Tb = random_pose(rng)
        np.testing.assert_allclose(
            se3.adjoint(Ta @ Tb), se3.adjoint(Ta) @ se3.adjoint(Tb), atol=1e-10
        )


def test_adjoint_intertwines_hat():
    x = random_twist(rng)
    T = random_pose(rng)
    lhs = T @ se3.hat6(x) @ se3.pose_inverse(T)
    np.testing.assert_allclose(se3.vee6(lhs), se3.adjoint(T) @ x, atol=1e-10)


def test_left_jacobian_matches_series():
    for scale in (1.0, 0.05, 1e-5):
        for _ in range(20):
            x = random_twist(rng, scale, scale)
            np.testing.assert_allclose(
                se3.left_jacobian(x), se3.left_jacobian_series(x, 30), atol=1e-10
            )


def test_left_jacobian_inverse():
    for scale in (1.0, 0.01):
        for _ in range(20):
            x = random_twist(rng, scale, scale)
            np.testing.assert_allclose(
                se3.left_jacobian_inv(x) @ se3.left_jacobian(x),
                np.eye(6),
                atol=1e-10,
            )


def test_left_jacobian_fixes_its_own_twist():
    # J(x) x = x is the defining identity that makes constant-strain
    # rollouts exact prior means.
    x = random_twist(rng, 2.0, 1.4)
    np.testing.assert_allclose(se3.left_jacobian(x) @ x, x, atol=1e-12)


def test_jac_so3_matches_rotation_block():
    w = np.array([0.7, -0.3, 0.4])
    x = np.concatenate([np.zeros(3), w])
    np.testing.assert_allclose(se3.left_jacobian(x)[3:, 3:], se3.jac_so3(w), atol=1e-12)


def test_check_pose_rejects_bad_matrices():
    T = np.eye(4)
    T[0, 0] = 1.0 + 1e-6
    with pytest.raises(ValueError):
        se3.check_pose(T)
    flipped = np.diag([1.0, 1.0, -1.0, 1.0])
    with pytest.raises(ValueError):
        se3.check_pose(flipped)
    T = np.eye(4)
    T[3, 0] = 1e-6
    with pytest.raises(ValueError):
        se3.check_pose(T)
    T = np.eye(4)
    T[0, 3] = np.nan
    with pytest.raises(ValueError):
        se3.check_pose(T)


def test_pose_parts_roundtrip():
    T = random_pose(rng)
    rebuilt = se3.pose_from_parts(se3.rotation(T), se3.translation(T))
    np.testing.assert_array_equal(rebuilt, T)


def test_rotation_angle_deg():
    C = se3.exp_so3(np.array([0.0, 0.0, np.pi / 2]))
    assert se3.rotation_angle_deg(np.eye(3), np.eye(3)) == 0.0
    np.testing.assert_allclose(se3.rotation_angle_deg(np.eye(3), C), 90.0, atol=1e-10)
    np.testing.assert_allclose(se3.rotation_angle_deg(C, np.eye(3)), 90.0, atol=1e-10)
