import numpy as np
import pytest

from rsqp.liegroup import (
    NearPiSingularity,
    NotPSD,
    NotSkew,
    exp_so3,
    hat,
    log_so3,
    quat_from_rotation,
    rot_z,
    rotation_from_quat,
    rotation_valid,
    sym_sqrt,
    vee,
)


def test_hat_zero():
    assert np.array_equal(hat([0, 0, 0]), np.zeros((3, 3)))


def test_hat_pattern():
    W = hat([1.0, 2.0, 3.0])
    expected = np.array([[0, -3, 2], [3, 0, -1], [-2, 1, 0]], dtype=float)
    assert np.array_equal(W, expected)


def test_hat_is_cross_product():
    rng = np.random.default_rng(0)
    for _ in range(50):
        w, u = rng.normal(size=3), rng.normal(size=3)
        assert np.allclose(hat(w) @ u, np.cross(w, u), atol=1e-14)
        assert np.allclose(hat(w) @ w, 0.0, atol=1e-14)


def test_vee_pattern():
    assert np.array_equal(vee(np.zeros((3, 3))), np.zeros(3))
    W = np.array([[0, -3, 2], [3, 0, -1], [-2, 1, 0]], dtype=float)
    assert np.array_equal(vee(W), [1.0, 2.0, 3.0])


def test_vee_hat_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(100):
        w = rng.normal(size=3) * 10
        assert np.array_equal(vee(hat(w)), w)


def test_vee_rejects_non_skew():
    with pytest.raises(NotSkew):
        vee(np.eye(3))


def test_exp_identity():
    assert np.allclose(exp_so3([0, 0, 0]), np.eye(3))


def test_exp_quarter_turn_z():
    expected = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]], dtype=float)
    assert np.allclose(exp_so3([0, 0, np.pi / 2]), expected, atol=1e-15)


def test_exp_output_is_rotation():
    rng = np.random.default_rng(2)
    for scale in (1e-12, 1e-6, 1.0, 3.0, 10.0):
        w = rng.normal(size=3)
        w = w / np.linalg.norm(w) * scale
        assert rotation_valid(exp_so3(w))


def test_log_exp_roundtrip():
    rng = np.random.default_rng(3)
    for _ in range(100):
        w = rng.normal(size=3)
        w = w / np.linalg.norm(w) * rng.uniform(0, 3.0)
        assert np.allclose(log_so3(exp_so3(w)), w, atol=1e-9)


def test_exp_log_roundtrip_near_pi():
    # angle 3.1 rad exercises the R + I axis-recovery branch
    rng = np.random.default_rng(4)
    for _ in range(20):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        w = 3.1 * axis
        R = exp_so3(w)
        assert np.allclose(exp_so3(log_so3(R)), R, atol=1e-9)


def test_log_angle_is_norm():
    w = np.array([0.3, -0.4, 1.2])
    R = exp_so3(w)
    assert np.isclose(np.linalg.norm(log_so3(R)), np.linalg.norm(w), atol=1e-12)


def test_log_raises_at_pi():
    with pytest.raises(NearPiSingularity):
        log_so3(exp_so3([np.pi, 0, 0]))


def test_sym_sqrt_identity_and_diag():
    assert np.allclose(sym_sqrt(np.eye(4)), np.eye(4))
    assert np.allclose(sym_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))


def test_sym_sqrt_random_spd():
    rng = np.random.default_rng(5)
    for _ in range(20):
        B = rng.normal(size=(6, 6))
        A = B @ B.T + 1e-3 * np.eye(6)
        S = sym_sqrt(A)
        assert np.allclose(S, S.T)
        assert np.allclose(S @ S, A, rtol=1e-8, atol=1e-10)
        # sqrt commutes with its square
        assert np.allclose(S @ A, A @ S, atol=1e-8)


def test_sym_sqrt_rejects_indefinite():
    with pytest.raises(NotPSD):
        sym_sqrt(np.diag([1.0, -1.0]))


def test_damping_construction():
    # D = sqrt(L) sqrt(K) + sqrt(K) sqrt(L) is symmetric; scalar case 2*sqrt(l*k)
    rng = np.random.default_rng(6)
    B = rng.normal(size=(6, 6))
    L = B @ B.T + 0.1 * np.eye(6)
    K = np.diag([2000.0, 2000, 2000, 20, 20, 20])
    D = sym_sqrt(L) @ sym_sqrt(K) + sym_sqrt(K) @ sym_sqrt(L)
    assert np.allclose(D, D.T, atol=1e-10)
    d = sym_sqrt(np.array([[3.0]])) @ sym_sqrt(np.array([[300.0]])) * 2
    assert np.isclose(d[0, 0], 2 * np.sqrt(3.0 * 300.0))


def test_quaternion_roundtrip():
    rng = np.random.default_rng(7)
    for _ in range(100):
        R = exp_so3(rng.normal(size=3))
        q = quat_from_rotation(R)
        assert abs(np.linalg.norm(q) - 1.0) < 1e-9
        assert q[0] >= 0.0
        assert np.allclose(rotation_from_quat(q), R, atol=1e-12)


def test_rot_z():
    assert np.allclose(rot_z(np.pi / 2) @ np.array([1, 0, 0]), [0, 1, 0], atol=1e-15)
