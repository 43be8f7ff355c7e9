"""Serial-chain rigid-body quantities: mass matrix, bias, kinematics, dynamics.

Thin public layer over the selected compute backend. The mass matrix uses
a composite-rigid-body recursion while the bias vector comes from a
Newton-Euler pass, so the two algorithms cross-check each other in the
test suite (columns of M equal unit-acceleration inverse dynamics).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import impl
from .model import ChainModel, RobotState

GRAVITY = np.array([0.0, 0.0, -9.81])


@dataclass
class EEKinematics:
    """End-effector pose/twist plus the Jacobian data the controller needs."""

    p: np.ndarray      # (3,)
    R: np.ndarray      # (3, 3)
    v: np.ndarray      # (6,) [linear; angular], world-aligned at the EE origin
    J: np.ndarray      # (6, n)
    dJdq: np.ndarray   # (6,) Jdot @ qdot


def mass_matrix(model: ChainModel, q: np.ndarray) -> np.ndarray:
    M = impl.mass_matrix(model.kernel_args(), np.asarray(q, dtype=np.float64))
    return np.asarray(M)


def bias(model: ChainModel, q, dq, gravity=GRAVITY) -> np.ndarray:
    return np.asarray(
        impl.bias(model.kernel_args(), np.asarray(q, float), np.asarray(dq, float),
                  np.asarray(gravity, float))
    )


def inverse_dynamics(model: ChainModel, q, dq, qdd, gravity=GRAVITY) -> np.ndarray:
    return np.asarray(
        impl.rnea(model.kernel_args(), np.asarray(q, float), np.asarray(dq, float),
                  np.asarray(qdd, float), np.asarray(gravity, float))
    )


def ee_kinematics(model: ChainModel, state: RobotState) -> EEKinematics:
    p, R, J, v, djdq = impl.ee_state(model.kernel_args(), state.q, state.dq)
    return EEKinematics(p=np.asarray(p), R=np.asarray(R), v=np.asarray(v),
                        J=np.asarray(J), dJdq=np.asarray(djdq))


def forward_dynamics(model: ChainModel, state: RobotState, tau, ext_wrench=None,
                     gravity=GRAVITY) -> np.ndarray:
    """qdd satisfying M qdd + h = tau + J^T f for an EE wrench f."""
    f = np.zeros(6) if ext_wrench is None else np.asarray(ext_wrench, float)
    return np.asarray(
        impl.fd(model.kernel_args(), state.q, state.dq, np.asarray(tau, float), f,
                np.asarray(gravity, float))
    )


def integrate(model: ChainModel, state: RobotState, qdd, h_step: float) -> RobotState:
    """Semi-implicit Euler: velocity first, then position with the new velocity."""
    if h_step <= 0:
        raise ValueError("h_step must be positive")
    dq_next = state.dq + h_step * np.asarray(qdd, float)
    q_next = state.q + h_step * dq_next
    return RobotState(q=q_next, dq=dq_next)


def task_inertia(J: np.ndarray, M: np.ndarray, damping: float = 1e-6) -> np.ndarray:
    """Task-space equivalent inertia (J M^-1 J^T)^-1, damped near singularity."""
    A = J @ np.linalg.solve(M, J.T)
    A = 0.5 * (A + A.T)
    if np.linalg.svd(A, compute_uv=False)[-1] < 1e-8:
        A = A + damping * np.eye(A.shape[0])
    lam = np.linalg.inv(A)
    return 0.5 * (lam + lam.T)
