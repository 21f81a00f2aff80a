"""SO(3)/SE(3) primitives for twists ordered [nu; omega].

Poses are plain 4x4 homogeneous transforms, twists are length-6 vectors with
the translational part stacked above the rotational part. All functions are
pure and side-effect free.
"""

from __future__ import annotations

import numpy as np

# Below this rotation angle the exponential falls back to a second-order
# Taylor expansion to avoid 0/0 in the closed forms.
SMALL_ANGLE = 1e-8
# Below this angle the SE(3) Jacobians are evaluated by truncated series.
# The closed-form coefficients cancel catastrophically as theta -> 0 while
# the series converges to machine precision in a few terms there.
SERIES_ANGLE = 0.1
# Tolerance on the structural zeros checked by the vee maps.
STRUCTURE_TOL = 1e-9
# log is restricted to rotation angles below pi minus this margin; the
# principal branch is ill-conditioned at the cut.
BRANCH_MARGIN = 1e-6


def hat3(v) -> np.ndarray:
    """3x3 skew matrix such that hat3(v) @ w == np.cross(v, w)."""
    v = np.asarray(v, dtype=float)
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee3(M) -> np.ndarray:
    """Inverse of hat3. Rejects matrices that are not skew within tolerance."""
    M = np.asarray(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"expected 3x3 matrix, got {M.shape}")
    if np.max(np.abs(M + M.T)) > STRUCTURE_TOL:
        raise ValueError("matrix is not skew-symmetric within tolerance")
    return np.array([M[2, 1], M[0, 2], M[1, 0]])


def hat6(x) -> np.ndarray:
    """4x4 se(3) matrix [[hat3(omega), nu], [0, 0]] of a twist [nu; omega]."""
    x = np.asarray(x, dtype=float)
    out = np.zeros((4, 4))
    out[:3, :3] = hat3(x[3:6])
    out[:3, 3] = x[0:3]
    return out


def vee6(M) -> np.ndarray:
    """Inverse of hat6. Rejects matrices without the expected zero pattern."""
    M = np.asarray(M, dtype=float)
    if M.shape != (4, 4):
        raise ValueError(f"expected 4x4 matrix, got {M.shape}")
    if np.max(np.abs(M[3, :])) > STRUCTURE_TOL:
        raise ValueError("bottom row must be zero within tolerance")
    omega = vee3(M[:3, :3])
    return np.concatenate([M[:3, 3], omega])


def curly_hat(x) -> np.ndarray:
    """6x6 adjoint-algebra matrix [[hat3(w), hat3(v)], [0, hat3(w)]]."""
    x = np.asarray(x, dtype=float)
    W = hat3(x[3:6])
    out = np.zeros((6, 6))
    out[:3, :3] = W
    out[:3, 3:] = hat3(x[0:3])
    out[3:, 3:] = W
    return out


def exp_so3(phi) -> np.ndarray:
    """Rodrigues rotation matrix for a rotation vector."""
    phi = np.asarray(phi, dtype=float)
    theta = np.linalg.norm(phi)
    W = hat3(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) + W + 0.5 * (W @ W)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / theta**2
    return np.eye(3) + a * W + b * (W @ W)


def log_so3(C) -> np.ndarray:
    """Rotation vector of C on the principal branch (angle < pi)."""
    C = np.asarray(C, dtype=float)
    cos_theta = np.clip((np.trace(C) - 1.0) / 2.0, -1.0, 1.0)
    theta = np.arccos(cos_theta)
    if theta >= np.pi - BRANCH_MARGIN:
        raise ValueError("rotation angle too close to pi for the principal branch")
    if theta < SMALL_ANGLE:
        # First-order: C ~ I + hat3(phi).
        return vee3(0.5 * (C - C.T))
    return vee3(theta / (2.0 * np.sin(theta)) * (C - C.T))


def jac_so3(phi) -> np.ndarray:
    """Left Jacobian of SO(3)."""
    phi = np.asarray(phi, dtype=float)
    theta = np.linalg.norm(phi)
    W = hat3(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) + 0.5 * W + (W @ W) / 6.0
    a = (1.0 - np.cos(theta)) / theta**2
    b = (theta - np.sin(theta)) / theta**3
    return np.eye(3) + a * W + b * (W @ W)


def jac_so3_inv(phi) -> np.ndarray:
    """Inverse left Jacobian of SO(3). Requires angle < pi."""
    phi = np.asarray(phi, dtype=float)
    theta = np.linalg.norm(phi)
    if theta >= np.pi - BRANCH_MARGIN:
        raise ValueError("rotation angle too close to pi")
    W = hat3(phi)
    if theta < SMALL_ANGLE:
        return np.eye(3) - 0.5 * W + (W @ W) / 12.0
    c = 1.0 / theta**2 - (1.0 + np.cos(theta)) / (2.0 * theta * np.sin(theta))
    return np.eye(3) - 0.5 * W + c * (W @ W)


def exp_se3(xi) -> np.ndarray:
    """Matrix exponential of hat6(xi) as a 4x4 pose."""
    xi = np.asarray(xi, dtype=float)
    nu, omega = xi[0:3], xi[3:6]
    T = np.eye(4)
    T[:3, :3] = exp_so3(omega)
    T[:3, 3] = jac_so3(omega) @ nu
    return T


def log_se3(T) -> np.ndarray:
    """Twist [nu; omega] with exp_se3(log_se3(T)) == T, principal branch."""
    T = np.asarray(T, dtype=float)
    omega = log_so3(T[:3, :3])
    nu = jac_so3_inv(omega) @ T[:3, 3]
    return np.concatenate([nu, omega])


def adjoint(T) -> np.ndarray:
    """6x6 adjoint [[C, hat3(r) C], [0, C]] of a pose."""
    T = np.asarray(T, dtype=float)
    C = T[:3, :3]
    out = np.zeros((6, 6))
    out[:3, :3] = C
    out[:3, 3:] = hat3(T[:3, 3]) @ C
    out[3:, 3:] = C
    return out


def left_jacobian_series(xi, n_terms: int = 30) -> np.ndarray:
    """Truncated series sum_n curly_hat(xi)^n / (n+1)!.

    Slow reference evaluator; the closed-form left_jacobian is checked
    against it.
    """
    A = curly_hat(xi)
    J = np.eye(6)
    term = np.eye(6)
    for n in range(1, n_terms):
        term = term @ A / (n + 1.0)
        J = J + term
    return J


def _q_block(nu, omega) -> np.ndarray:
    """Top-right block of the closed-form SE(3) left Jacobian."""
    theta = np.linalg.norm(omega)
    V = hat3(nu)
    W = hat3(omega)
    WV = W @ V
    VW = V @ W
    WVW = WV @ W
    c1 = (theta - np.sin(theta)) / theta**3
    m2 = (1.0 - theta**2 / 2.0 - np.cos(theta)) / theta**4
    m3 = (theta - np.sin(theta) - theta**3 / 6.0) / theta**5
    c3 = -0.5 * (m2 - 3.0 * m3)
    return (
        0.5 * V
        + c1 * (WV + VW + W @ VW)
        - m2 * (W @ WV + VW @ W - 3.0 * WVW)
        + c3 * (WVW @ W + W @ WVW)
    )


def left_jacobian(xi) -> np.ndarray:
    """Left Jacobian of SE(3) such that d(log) pulls back left perturbations.

    Requires the rotation angle to be below pi.
    """
    xi = np.asarray(xi, dtype=float)
    nu, omega = xi[0:3], xi[3:6]
    theta = np.linalg.norm(omega)
    if theta >= np.pi - BRANCH_MARGIN:
        raise ValueError("rotation angle too close to pi")
    if theta < SERIES_ANGLE:
        # curly_hat(xi) is near-nilpotent here; the series is exact to
        # machine precision independent of the translation magnitude.
        return left_jacobian_series(xi, n_terms=20)
    Jr = jac_so3(omega)
    out = np.zeros((6, 6))
    out[:3, :3] = Jr
    out[3:, 3:] = Jr
    out[:3, 3:] = _q_block(nu, omega)
    return out


def left_jacobian_inv(xi) -> np.ndarray:
    """Inverse of left_jacobian, evaluated in closed form."""
    xi = np.asarray(xi, dtype=float)
    nu, omega = xi[0:3], xi[3:6]
    theta = np.linalg.norm(omega)
    if theta >= np.pi - BRANCH_MARGIN:
        raise ValueError("rotation angle too close to pi")
    if theta < SERIES_ANGLE:
        return np.linalg.inv(left_jacobian_series(xi, n_terms=20))
    Ji = jac_so3_inv(omega)
    out = np.zeros((6, 6))
    out[:3, :3] = Ji
    out[3:, 3:] = Ji
    out[:3, 3:] = -Ji @ _q_block(nu, omega) @ Ji
    return out


def pose_from_parts(C, r) -> np.ndarray:
    T = np.eye(4)
    T[:3, :3] = np.asarray(C, dtype=float)
    T[:3, 3] = np.asarray(r, dtype=float)
    return T


def rotation(T) -> np.ndarray:
    return np.asarray(T, dtype=float)[:3, :3]


def translation(T) -> np.ndarray:
    return np.asarray(T, dtype=float)[:3, 3]


def pose_inverse(T) -> np.ndarray:
    """Inverse using the orthogonality of the rotation block."""
    T = np.asarray(T, dtype=float)
    C = T[:3, :3]
    out = np.eye(4)
    out[:3, :3] = C.T
    out[:3, 3] = -C.T @ T[:3, 3]
    return out


def check_pose(T, tol: float = 1e-9) -> np.ndarray:
    """Validate a 4x4 pose: orthonormal rotation, unit bottom row."""
    T = np.asarray(T, dtype=float)
    if T.shape != (4, 4):
        raise ValueError(f"expected 4x4 pose, got {T.shape}")
    if not np.all(np.isfinite(T)):
        raise ValueError("pose contains non-finite entries")
    C = T[:3, :3]
    if np.max(np.abs(C.T @ C - np.eye(3))) > tol:
        raise ValueError("rotation block is not orthonormal within tolerance")
    if abs(np.linalg.det(C) - 1.0) > tol:
        raise ValueError("rotation block must have determinant +1")
    if np.max(np.abs(T[3, :] - np.array([0.0, 0.0, 0.0, 1.0]))) > tol:
        raise ValueError("bottom row must be (0, 0, 0, 1)")
    return T


def rotation_angle_deg(C_a, C_b) -> float:
    """Angle in degrees between two rotation matrices."""
    R = np.asarray(C_a, dtype=float) @ np.asarray(C_b, dtype=float).T
    cos_theta = np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0)
    return float(np.degrees(np.arccos(cos_theta)))
