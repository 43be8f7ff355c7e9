"""The QP controllers: recording-time impedance, ante/interim/post
reference-spreading modes, and the mode supervisor with its baselines.

All modes share one structure: per arm, a desired end-effector wrench is
turned into an acceleration task through the task-space inertia, a scalar
posture task pins the redundant degree of freedom, and one stacked QP over
both arms' joint accelerations enforces position/velocity/torque limits.
The modes differ only in which reference feeds the wrench law:

  recording  low gains, operator-commanded target, no feedforward
  ante       high gains, extended ante-impact reference + feedforward
  interim    convex blend of ante/post signals; the velocity error is
             measured against (1-gamma) v + gamma v_post, so velocity
             feedback vanishes at gamma = 0 and the whole law equals the
             post law at gamma = 1 (no input step at either switch)
  post       ante structure with post-impact reference substituted
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EEKinematics, task_inertia
from .liegroup import exp_so3, log_so3, sym_sqrt, vee
from .qp import Infeasible, MaxIterations, build_control_qp, solve
from .reference import ExtendedReference, RefSample, RsParams


class Mode(enum.Enum):
    RECORDING = "recording"
    ANTE = "ante"
    INTERIM = "interim"
    POST = "post"


class Variant(enum.Enum):
    PROPOSED = "proposed"
    NO_RS = "no_rs"
    NO_INTERIM = "no_interim"


@dataclass
class ModeState:
    mode: Mode = Mode.ANTE
    T_imp: float | None = None
    gamma: float = 0.0


@dataclass
class ControllerConfig:
    rs: RsParams = field(default_factory=RsParams)
    variant: Variant = Variant.PROPOSED


@dataclass
class ArmSnapshot:
    """Measured per-arm quantities entering one control tick."""

    kin: EEKinematics
    M: np.ndarray
    h: np.ndarray
    q: np.ndarray
    dq: np.ndarray


@dataclass
class OperatorCommand:
    """Recording-mode reference: target pose/twist per arm."""

    p: np.ndarray        # (2, 3)
    R: np.ndarray        # (2, 3, 3)
    v: np.ndarray        # (2, 6)
    xi: np.ndarray       # (2,)
    xidot: np.ndarray    # (2,)


@dataclass
class ControlOutput:
    tau: list                 # per-arm (n,) commanded torque
    f_des: np.ndarray         # (2, 6) desired wrench per arm
    beta: np.ndarray          # (2,) posture acceleration target
    qdd: np.ndarray           # stacked solution
    qp_iterations: int
    fallback: bool            # gravity compensation was commanded instead
    kkt_residual: float


def rotation_error(R: np.ndarray, R_d: np.ndarray) -> np.ndarray:
    """R (log(R^T R_d))^vee : world-frame rotation error used by all modes."""
    return R @ log_so3(R.T @ R_d)


def damping_from(K: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Critically-damped gain: D = sqrt(L) sqrt(K) + sqrt(K) sqrt(L)."""
    sK = np.diag(np.sqrt(np.diag(K)))
    sL = sym_sqrt(lam)
    D = sL @ sK + sK @ sL
    return 0.5 * (D + D.T)


def impedance_wrench(p_d, R_d, v_d, f_ff, kin: EEKinematics, K, D) -> np.ndarray:
    """Spring-damper wrench toward a pose/twist target, plus feedforward."""
    err = np.concatenate([np.asarray(p_d, float) - kin.p,
                          rotation_error(kin.R, R_d)])
    return (np.asarray(f_ff, float) + D @ (np.asarray(v_d, float) - kin.v)
            + K @ err)


def geodesic_blend(R_a: np.ndarray, R_p: np.ndarray, gamma: float) -> np.ndarray:
    """exp(gamma log(Ra^T Rp)) along the geodesic from Ra to Rp."""
    return R_a @ exp_so3(gamma * log_so3(R_a.T @ R_p))


def interim_wrench(ante: RefSample, post: RefSample, kin: EEKinematics,
                   gamma: float, K, D) -> np.ndarray:
    """Blended wrench; the measured twist replaces the ante velocity
    reference, deleting velocity feedback at gamma = 0."""
    R_int = geodesic_blend(ante.R, post.R, gamma)
    err = np.concatenate([(1.0 - gamma) * ante.p + gamma * post.p - kin.p,
                          rotation_error(kin.R, R_int)])
    v_target = (1.0 - gamma) * kin.v + gamma * post.v
    return ((1.0 - gamma) * ante.f + gamma * post.f
            + D @ (v_target - kin.v) + K @ err)


def posture_accel(xi_d, xid_d, beta_ff, xi, xid, k_pos) -> float:
    return float(beta_ff + 2.0 * np.sqrt(k_pos) * (xid_d - xid)
                 + k_pos * (xi_d - xi))


def interim_posture_accel(ante: RefSample, post: RefSample, xi, xid,
                          gamma: float, k_pos) -> float:
    ff = (1.0 - gamma) * ante.beta + gamma * post.beta
    vel = 2.0 * np.sqrt(k_pos) * ((1.0 - gamma) * xid + gamma * post.xidot - xid)
    pos = k_pos * ((1.0 - gamma) * ante.xi + gamma * post.xi - xi)
    return float(ff + vel + pos)


def supervisor_step(state: ModeState, t: float, event, variant: Variant,
                    rs: RsParams, T_r: float) -> ModeState:
    """Advance the mode machine one tick.

    proposed     ante -> interim on detection, interim -> post after dt_int
    no_rs        ante -> post at the nominal impact time (detection ignored)
    no_interim   ante -> post at the detected impact time
    """
    mode, T_imp, gamma = state.mode, state.T_imp, state.gamma
    if mode == Mode.RECORDING:
        return state

    if variant == Variant.NO_RS:
        if mode == Mode.ANTE and t >= T_r:
            mode = Mode.POST
    elif variant == Variant.NO_INTERIM:
        if mode == Mode.ANTE and event is not None:
            mode, T_imp = Mode.POST, event.time
    else:
        if mode == Mode.ANTE and event is not None:
            mode, T_imp = Mode.INTERIM, event.time
        if mode == Mode.INTERIM:
            gamma = float(np.clip((t - T_imp) / rs.dt_int, 0.0, 1.0))
            if t - T_imp >= rs.dt_int - 1e-9:   # slop for float time grids
                mode = Mode.POST
    return ModeState(mode=mode, T_imp=T_imp, gamma=gamma)


class RsController:
    """Builds and solves the per-tick stacked QP for both arms."""

    def __init__(self, models, cfg: ControllerConfig):
        self.models = list(models)
        self.cfg = cfg
        self.rs = cfg.rs
        self._warm = None
        self._K = {
            Mode.RECORDING: np.diag(self.rs.K_r),
            Mode.ANTE: np.diag(self.rs.K_a),
            Mode.INTERIM: np.diag(self.rs.K_int),
            Mode.POST: np.diag(self.rs.K_p),
        }
        self._k_pos = {
            Mode.RECORDING: self.rs.k_pos_r,
            Mode.ANTE: self.rs.k_pos_a,
            Mode.INTERIM: self.rs.k_pos_int,
            Mode.POST: self.rs.k_pos_p,
        }

    def desired_wrench(self, i: int, snap: ArmSnapshot, mode_state: ModeState,
                       t: float, ref: ExtendedReference | None,
                       command: OperatorCommand | None):
        """Per-arm (f_des, beta, Lambda) for the active mode."""
        mode = mode_state.mode
        K = self._K[mode]
        k_pos = self._k_pos[mode]
        lam = task_inertia(snap.kin.J, snap.M)
        D = damping_from(K, lam)
        s_joint = self.rs.posture_joint
        xi = float(snap.q[s_joint])
        xid = float(snap.dq[s_joint])

        if mode == Mode.RECORDING:
            f = impedance_wrench(command.p[i], command.R[i], command.v[i],
                                 np.zeros(6), snap.kin, K, D)
            beta = posture_accel(command.xi[i], command.xidot[i], 0.0, xi, xid, k_pos)
        elif mode == Mode.ANTE:
            s = ref.ante(i, t)
            f = impedance_wrench(s.p, s.R, s.v, s.f, snap.kin, K, D)
            beta = posture_accel(s.xi, s.xidot, s.beta, xi, xid, k_pos)
        elif mode == Mode.INTERIM:
            sa, sp = ref.ante(i, t), ref.post(i, t)
            f = interim_wrench(sa, sp, snap.kin, mode_state.gamma, K, D)
            beta = interim_posture_accel(sa, sp, xi, xid, mode_state.gamma, k_pos)
        else:
            s = ref.post(i, t)
            f = impedance_wrench(s.p, s.R, s.v, s.f, snap.kin, K, D)
            beta = posture_accel(s.xi, s.xidot, s.beta, xi, xid, k_pos)
        return f, beta, lam

    def step(self, snaps, mode_state: ModeState, t: float,
             ref: ExtendedReference | None = None,
             command: OperatorCommand | None = None) -> ControlOutput:
        rs = self.rs
        ns = [m.n for m in self.models]
        m_tot = sum(ns)
        offs = np.cumsum([0] + ns)

        tasks = []
        constraints = []
        f_des = np.zeros((2, 6))
        betas = np.zeros(2)
        for i, (model, snap) in enumerate(zip(self.models, snaps)):
            f, beta, lam = self.desired_wrench(i, snap, mode_state, t, ref, command)
            f_des[i] = f
            betas[i] = beta
            o = offs[i]
            n = ns[i]

            J_task = np.zeros((6, m_tot))
            J_task[:, o:o + n] = snap.kin.J
            b_task = np.linalg.solve(lam, f) - snap.kin.dJdq
            tasks.append((J_task, b_task, rs.w_imp))

            S_row = np.zeros((1, m_tot))
            S_row[0, o + rs.posture_joint] = 1.0
            tasks.append((S_row, np.array([beta]), rs.w_pos))

            eye = np.zeros((n, m_tot))
            eye[:, o:o + n] = np.eye(n)
            dt = rs.dt
            constraints.append((0.5 * dt * dt * eye,
                                model.q_min - snap.q - dt * snap.dq,
                                model.q_max - snap.q - dt * snap.dq))
            constraints.append((dt * eye,
                                -model.dq_max - snap.dq,
                                model.dq_max - snap.dq))
            M_rows = np.zeros((n, m_tot))
            M_rows[:, o:o + n] = snap.M
            constraints.append((M_rows, -model.tau_max - snap.h,
                                model.tau_max - snap.h))

        problem = build_control_qp(tasks, constraints)
        try:
            sol = solve(problem, warm_start=self._warm)
            self._warm = sol.active_set
            qdd = sol.x
            fallback = False
            iters = sol.iterations
            kkt = sol.kkt_residual
        except (Infeasible, MaxIterations):
            self._warm = None
            qdd = np.zeros(m_tot)
            fallback = True
            iters = 0
            kkt = np.inf

        tau = []
        for i, snap in enumerate(snaps):
            if fallback:
                tau.append(snap.h.copy())
            else:
                qdd_i = qdd[offs[i]:offs[i] + ns[i]]
                tau.append(snap.M @ qdd_i + snap.h)
        return ControlOutput(tau=tau, f_des=f_des, beta=betas, qdd=qdd,
                             qp_iterations=iters, fallback=fallback,
                             kkt_residual=kkt)
