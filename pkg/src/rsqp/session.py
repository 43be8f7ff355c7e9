"""One simulated control session: the hard-sequenced 1 kHz loop.

Each tick: measure (with sensor noise), update the force observers and
the impact detector, advance the mode supervisor, solve the control QP,
log, then integrate the world under the held torques. Used by the
demonstration recorder, the autonomous episode runner, and the
teleoperation service.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._kernels import impl
from .control import (ArmSnapshot, ControllerConfig, Mode, ModeState,
                      OperatorCommand, RsController, Variant, supervisor_step)
from .detection import DetectorParams, ImpactDetector, MomentumObserver
from .dynamics import EEKinematics
from .liegroup import quat_from_rotation
from .model import PlantConfig, displace_box
from .reference import ExtendedReference, Recording, RsParams
from .world import ContactWorld

MODE_CODE = {Mode.RECORDING: 0, Mode.ANTE: 1, Mode.INTERIM: 2, Mode.POST: 3}
CODE_MODE = {v: k for k, v in MODE_CODE.items()}


@dataclass
class SessionConfig:
    rs: RsParams = field(default_factory=RsParams)
    det: DetectorParams = field(default_factory=DetectorParams)
    variant: Variant = Variant.PROPOSED
    noise_dq_std: float = 1e-3     # rad/s on measured joint velocity
    noise_f_std: float = 0.2       # N per axis on the force estimate
    seed: int | None = None


class EpisodeLog:
    """Per-tick records of one episode on a uniform grid."""

    def __init__(self, n_ticks: int, n_joints: int = 7, meta: dict | None = None):
        T = n_ticks
        self.t = np.zeros(T)
        self.mode = np.zeros(T, dtype=np.int8)
        self.gamma = np.zeros(T)
        self.q = np.zeros((2, T, n_joints))
        self.dq = np.zeros((2, T, n_joints))
        self.p = np.zeros((2, T, 3))
        self.quat = np.zeros((2, T, 4))
        self.v = np.zeros((2, T, 6))
        self.f_des = np.zeros((2, T, 6))
        self.f_contact = np.zeros((2, T, 6))
        self.f_est = np.zeros((2, T, 3))
        self.beta = np.zeros((2, T))
        self.tau = np.zeros((2, T, n_joints))
        self.tau_norm = np.zeros(T)
        self.pad_flag = np.zeros((2, T), dtype=bool)
        self.box = np.zeros((T, 8))
        self.qp_iterations = np.zeros(T, dtype=np.int32)
        self.qp_kkt = np.zeros(T)
        self.fallbacks = 0
        self.detection_time: float | None = None
        self.detection_arm: int | None = None
        self.first_contact_time = [None, None]
        self.meta = meta or {}
        self._k = 0

    def __len__(self):
        return self._k

    def trim(self):
        k = self._k
        for name in ("t", "mode", "gamma", "tau_norm", "qp_iterations",
                     "qp_kkt", "box"):
            setattr(self, name, getattr(self, name)[:k])
        for name in ("q", "dq", "p", "quat", "v", "f_des", "f_contact", "f_est",
                     "beta", "tau", "pad_flag"):
            setattr(self, name, getattr(self, name)[:, :k])
        return self

    def snapshot(self, k: int | None = None) -> "EpisodeLog":
        """Copy of the first ``k`` ticks; safe while the loop keeps writing."""
        k = self._k if k is None else min(k, self._k)
        out = EpisodeLog(k, n_joints=self.q.shape[2], meta=dict(self.meta))
        for name in ("t", "mode", "gamma", "tau_norm", "qp_iterations",
                     "qp_kkt", "box"):
            getattr(out, name)[:] = getattr(self, name)[:k]
        for name in ("q", "dq", "p", "quat", "v", "f_des", "f_contact", "f_est",
                     "beta", "tau", "pad_flag"):
            getattr(out, name)[:] = getattr(self, name)[:, :k]
        out.detection_time = self.detection_time
        out.detection_arm = self.detection_arm
        out.first_contact_time = list(self.first_contact_time)
        out.fallbacks = self.fallbacks
        out._k = k
        return out


class SimSession:
    """Owns the world, observers, detector, supervisor, and controller."""

    def __init__(self, plant: PlantConfig, cfg: SessionConfig,
                 reference: ExtendedReference | None = None,
                 displacement: float = 0.0,
                 recording_mode: bool = False):
        self.plant = plant
        self.cfg = cfg
        self.rs = cfg.rs
        box = displace_box(plant.fresh_box(), displacement)
        self.world = ContactWorld(plant, box=box, dt=cfg.rs.dt)
        self.reference = reference
        self.recording_mode = recording_mode
        self.controller = RsController(plant.arms,
                                       ControllerConfig(rs=cfg.rs, variant=cfg.variant))
        self.observers = [MomentumObserver(arm, gain=cfg.rs.observer_gain,
                                           gravity=plant.gravity)
                          for arm in plant.arms]
        self.detector = ImpactDetector(cfg.det, cfg.rs.dt)
        self.mode_state = ModeState(mode=Mode.RECORDING if recording_mode else Mode.ANTE)
        self.rng = np.random.default_rng(cfg.seed)
        self.T_r = reference.T_r if reference is not None else np.inf
        self._tau_prev = [np.zeros(arm.n) for arm in plant.arms]
        self._args = [arm.kernel_args() for arm in plant.arms]

    def measure(self):
        """Measured state with declared sensor noise on joint velocity."""
        snaps = []
        for i, arm in enumerate(self.plant.arms):
            q = self.world.q[i].copy()
            dq = self.world.dq[i].copy()
            if self.cfg.noise_dq_std > 0:
                dq = dq + self.rng.normal(0.0, self.cfg.noise_dq_std, arm.n)
            p_e, R_e, J, v, djdq = impl.ee_state(self._args[i], q, dq)
            kin = EEKinematics(p=np.asarray(p_e), R=np.asarray(R_e),
                               v=np.asarray(v), J=np.asarray(J),
                               dJdq=np.asarray(djdq))
            M = np.asarray(impl.mass_matrix(self._args[i], q))
            h = np.asarray(impl.bias(self._args[i], q, dq, self.plant.gravity))
            snaps.append(ArmSnapshot(kin=kin, M=M, h=h, q=q, dq=dq))
        return snaps

    def tick(self, log: EpisodeLog, command: OperatorCommand | None = None):
        t = self.world.time
        snaps = self.measure()

        f_est = np.zeros((2, 3))
        for i, obs in enumerate(self.observers):
            f = obs.step(snaps[i].q, snaps[i].dq, self._tau_prev[i], self.rs.dt)
            if self.cfg.noise_f_std > 0:
                f = f + self.rng.normal(0.0, self.cfg.noise_f_std, 3)
            f_est[i] = f

        event = None
        if self.detector.armed:
            event = self.detector.update(t, [s.kin.v[:3] for s in snaps], f_est)

        if not self.recording_mode:
            self.mode_state = supervisor_step(self.mode_state, t, event,
                                              self.cfg.variant, self.rs, self.T_r)
            if self.mode_state.mode not in (Mode.ANTE, Mode.RECORDING):
                self.detector.disarm()

        out = self.controller.step(snaps, self.mode_state, t,
                                   ref=self.reference, command=command)

        k = log._k
        log.t[k] = t
        log.mode[k] = MODE_CODE[self.mode_state.mode]
        log.gamma[k] = self.mode_state.gamma
        stacked = np.concatenate([out.tau[0], out.tau[1]])
        log.tau_norm[k] = float(np.linalg.norm(stacked))
        log.qp_iterations[k] = out.qp_iterations
        log.qp_kkt[k] = out.kkt_residual if np.isfinite(out.kkt_residual) else -1.0
        if out.fallback:
            log.fallbacks += 1
        for i in range(2):
            log.q[i, k] = snaps[i].q
            log.dq[i, k] = snaps[i].dq
            log.p[i, k] = snaps[i].kin.p
            log.quat[i, k] = quat_from_rotation(snaps[i].kin.R)
            log.v[i, k] = snaps[i].kin.v
            log.f_des[i, k] = out.f_des[i]
            log.f_est[i, k] = f_est[i]
            log.beta[i, k] = out.beta[i]
            log.tau[i, k] = out.tau[i]
        log.box[k] = self.world._box_state
        if event is not None and log.detection_time is None:
            log.detection_time = event.time
            log.detection_arm = event.arm

        snap = self.world.step(out.tau[0], out.tau[1])
        for i in range(2):
            log.f_contact[i, k] = snap["pad_wrench"][i]
            log.pad_flag[i, k] = bool(snap["pad_flag"][i])
        log.first_contact_time = list(self.world.first_contact_time)
        self._tau_prev = [tau.copy() for tau in out.tau]
        log._k += 1
        return out

    def to_recording(self, log: EpisodeLog) -> Recording:
        s = self.rs.posture_joint
        return Recording(
            dt=self.rs.dt, t=log.t.copy(), p=log.p.copy(), quat=log.quat.copy(),
            v=log.v.copy(), xi=log.q[:, :, s].copy(), xidot=log.dq[:, :, s].copy(),
            f_r=log.f_des.copy(), beta=log.beta.copy(), q=log.q.copy(),
            dq=log.dq.copy(), f_est=log.f_est.copy())
