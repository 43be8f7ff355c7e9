"""Rotation-group helpers and small symmetric-matrix utilities.

Rotations are plain (3, 3) float64 orthonormal matrices with det +1,
angles in radians. These functions back the spring-damper control laws
(rotation errors, geodesic blending) and the critically-damped gain
construction, so they are kept allocation-light and free of any state.
"""

from __future__ import annotations

import numpy as np


class NotSkew(ValueError):
    """Input matrix is not skew-symmetric within tolerance."""


class NearPiSingularity(ValueError):
    """Rotation angle too close to pi for a well-conditioned logarithm."""


class NotPSD(ValueError):
    """Matrix has an eigenvalue below the negative tolerance."""


def hat(w) -> np.ndarray:
    """Map a 3-vector to the skew matrix with hat(w) @ u == cross(w, u)."""
    x, y, z = np.asarray(w, dtype=float)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(W) -> np.ndarray:
    """Inverse of :func:`hat`. Raises :class:`NotSkew` if W + W^T is not ~0."""
    W = np.asarray(W, dtype=float)
    if np.linalg.norm(W + W.T) > 1e-9:
        raise NotSkew(f"matrix is not skew-symmetric: |W + W^T| = {np.linalg.norm(W + W.T):.3e}")
    return np.array([W[2, 1], W[0, 2], W[1, 0]])


def exp_so3(w) -> np.ndarray:
    """Rodrigues formula: rotation matrix for the rotation vector w."""
    w = np.asarray(w, dtype=float)
    theta = np.linalg.norm(w)
    W = hat(w)
    if theta < 1e-8:
        # second-order series; exact enough to keep orthonormality at ~1e-16
        return np.eye(3) + W + 0.5 * (W @ W)
    a = np.sin(theta) / theta
    b = (1.0 - np.cos(theta)) / (theta * theta)
    return np.eye(3) + a * W + b * (W @ W)


def log_so3(R) -> np.ndarray:
    """Rotation vector of R. Domain restricted to angles < pi - 1e-6.

    The control laws never see errors of half a turn or more between the
    reference and the state; getting one means the reference is corrupt,
    so this fails loudly instead of picking an axis sign.
    """
    R = np.asarray(R, dtype=float)
    c = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    w2 = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    s = 0.5 * np.linalg.norm(w2)
    theta = np.arctan2(s, c)
    if theta >= np.pi - 1e-6:
        raise NearPiSingularity(f"rotation angle {theta:.9f} within 1e-6 of pi")
    if theta < 1e-6:
        # vee(R - R^T)/2 with second-order angle correction
        return 0.5 * w2 * (1.0 + theta * theta / 6.0)
    if theta < 2.8:
        return (theta / (2.0 * np.sin(theta))) * w2
    # near pi, extract the axis from the symmetric part: it carries
    # (1 - cos) n n^T without the vanishing sin term
    B = 0.5 * (R + R.T) - c * np.eye(3)
    k = int(np.argmax(np.diag(B)))
    axis = B[:, k] / np.sqrt(B[k, k] * (1.0 - c))
    axis /= np.linalg.norm(axis)
    if np.dot(axis, w2) < 0.0:
        axis = -axis
    return theta * axis


def sym_sqrt(A) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-1e-9, 0) are clamped to 0; anything lower raises
    :class:`NotPSD`.
    """
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.T)
    lam, V = np.linalg.eigh(A)
    if lam[0] < -1e-9:
        raise NotPSD(f"smallest eigenvalue {lam[0]:.3e} < -1e-9")
    S = (V * np.sqrt(np.clip(lam, 0.0, None))) @ V.T
    return 0.5 * (S + S.T)


def rotation_valid(R, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    return (
        R.shape == (3, 3)
        and np.linalg.norm(R.T @ R - np.eye(3)) <= tol
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def quat_from_rotation(R) -> np.ndarray:
    """Unit quaternion (w, x, y, z) for a rotation matrix (Shepperd's method)."""
    R = np.asarray(R, dtype=float)
    t = np.trace(R)
    if t > 0.0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s])
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        q = np.array([(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s])
    elif R[1, 1] >= R[2, 2]:
        s = np.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        q = np.array([(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s])
    else:
        s = np.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        q = np.array([(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s])
    q /= np.linalg.norm(q)
    if q[0] < 0.0:
        q = -q
    return q


def rotation_from_quat(q) -> np.ndarray:
    """Rotation matrix for a (w, x, y, z) quaternion (normalized internally)."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
