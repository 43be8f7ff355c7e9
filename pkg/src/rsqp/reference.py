"""Demonstration recordings and the extended ante/post-impact references.

The recording is split at the nominal impact time, with an exclusion
window of half-width ``dT_r`` on each side (impact detection is slightly
delayed and the post-impact transient rings), and each side is extended
over the full episode: feedforward/velocity signals by constant hold,
position by integrating the held velocity, orientation by integrating
the held angular velocity. Ante and post references therefore overlap
everywhere, which is what lets the controller always track a reference
consistent with the contact state it believes it is in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, filtfilt

from .detection import DetectorParams, scan_first_event
from .liegroup import exp_so3, log_so3, rotation_from_quat

RECORDING_SCHEMA = "rsqp-recording/1"
REFERENCE_SCHEMA = "rsqp-reference/1"


class NoImpactFound(RuntimeError):
    """The recording contains no sample satisfying the detector conditions."""


class WindowOutOfRange(ValueError):
    """Split time too close to the recording boundaries."""


class SchemaVersionMismatch(ValueError):
    pass


class CorruptFile(ValueError):
    pass


@dataclass(frozen=True)
class RsParams:
    """Control-loop and reference-spreading parameters (defaults: the
    values used throughout the experiments)."""

    dt: float = 1e-3
    dT_r: float = 0.1
    dt_int: float = 0.1
    K_r: tuple = (300.0, 300.0, 300.0, 10.0, 10.0, 10.0)
    K_a: tuple = (2000.0, 2000.0, 2000.0, 20.0, 20.0, 20.0)
    K_int: tuple = (2000.0, 2000.0, 2000.0, 20.0, 20.0, 20.0)
    K_p: tuple = (2000.0, 2000.0, 2000.0, 20.0, 20.0, 20.0)
    k_pos_r: float = 500.0
    k_pos_a: float = 500.0
    k_pos_int: float = 500.0
    k_pos_p: float = 500.0
    w_imp: float = 1.0
    w_pos: float = 1.0
    posture_joint: int = 0
    observer_gain: float = 100.0
    extension_filter_hz: float = 20.0

    def __post_init__(self):
        if min(self.dt, self.dT_r, self.dt_int, self.k_pos_r, self.w_imp, self.w_pos) <= 0:
            raise ValueError("RsParams entries must be positive")


@dataclass
class Recording:
    """Uniformly sampled demonstration signals, one row block per arm."""

    dt: float
    t: np.ndarray        # (T,)
    p: np.ndarray        # (2, T, 3) EE position
    quat: np.ndarray     # (2, T, 4) EE orientation, (w, x, y, z)
    v: np.ndarray        # (2, T, 6) EE twist
    xi: np.ndarray       # (2, T) posture joint position
    xidot: np.ndarray    # (2, T)
    f_r: np.ndarray      # (2, T, 6) commanded impedance wrench
    beta: np.ndarray     # (2, T) commanded posture acceleration
    q: np.ndarray        # (2, T, n)
    dq: np.ndarray       # (2, T, n)
    f_est: np.ndarray    # (2, T, 3) observer force estimate

    def __post_init__(self):
        T = self.t.shape[0]
        for name in ("p", "quat", "v", "xi", "xidot", "f_r", "beta", "q", "dq", "f_est"):
            arr = getattr(self, name)
            if arr.shape[1] != T:
                raise ValueError(f"{name} length disagrees with the time grid")
        norms = np.linalg.norm(self.quat, axis=-1)
        if np.abs(norms - 1.0).max() > 1e-6:
            raise ValueError("stored quaternions must be unit norm")

    @property
    def n_arms(self) -> int:
        return self.p.shape[0]

    @property
    def duration(self) -> float:
        return float(self.t[-1])


def extract_nominal_impact_time(rec: Recording, det: DetectorParams) -> float:
    """First sample where the impact detector fires on either arm."""
    ev = scan_first_event(rec.t, rec.v[:, :, :3], rec.f_est, det, rec.dt)
    if ev is None:
        raise NoImpactFound("no sample satisfies the three detector conditions")
    return ev.time


@dataclass
class RefSample:
    f: np.ndarray       # (6,) feedforward wrench
    v: np.ndarray       # (6,) twist
    p: np.ndarray       # (3,)
    R: np.ndarray       # (3, 3)
    xi: float
    xidot: float
    beta: float


class _Side:
    """One extended side (ante or post) for one arm.

    ``sign`` +1: recorded for t <= T_split, extended after (ante).
    ``sign`` -1: recorded for t >= T_split, extended before (post).
    """

    def __init__(self, rec: Recording, arm: int, T_split: float, sign: int,
                 v_split: np.ndarray, xidot_split: float):
        self.rec = rec
        self.arm = arm
        self.T = T_split
        self.sign = sign
        self.v_split = v_split                      # filtered twist at the split
        self.xidot_split = xidot_split
        i = int(np.clip(np.searchsorted(rec.t, T_split - 1e-12), 0, len(rec.t) - 1))
        self.i_split = i
        self.p_split = rec.p[arm, i].copy()
        self.R_split = rotation_from_quat(rec.quat[arm, i])
        self.xi_split = float(rec.xi[arm, i])
        self.f_split = rec.f_r[arm, i].copy()
        self.beta_split = float(rec.beta[arm, i])

    def _interp(self, series, t):
        # linear interpolation on the recorded grid, clamped at both ends
        tt = self.rec.t
        x = np.clip(t, tt[0], tt[-1])
        i = int(np.clip(np.searchsorted(tt, x) - 1, 0, len(tt) - 2))
        a = (x - tt[i]) / (tt[i + 1] - tt[i])
        return (1.0 - a) * series[self.arm, i] + a * series[self.arm, i + 1]

    def _interp_R(self, t):
        tt = self.rec.t
        x = np.clip(t, tt[0], tt[-1])
        i = int(np.clip(np.searchsorted(tt, x) - 1, 0, len(tt) - 2))
        a = (x - tt[i]) / (tt[i + 1] - tt[i])
        R0 = rotation_from_quat(self.rec.quat[self.arm, i])
        R1 = rotation_from_quat(self.rec.quat[self.arm, i + 1])
        return R0 @ exp_so3(a * log_so3(R0.T @ R1))

    def _recorded_region(self, t) -> bool:
        return t <= self.T if self.sign > 0 else t >= self.T

    def _pos_scalar(self, t, split_val, rate, series):
        """Position-like signal: recorded, C1-matched into a linear extension."""
        if self._recorded_region(t):
            # reshape the grid segment touching the split into a cubic whose
            # derivative at the split equals the extension velocity, so the
            # left/right derivatives agree there
            dt = self.rec.dt
            u = (self.T - t) if self.sign > 0 else (t - self.T)
            if u < dt:
                t_in = self.T - self.sign * dt
                inner = self._interp(series, t_in)
                inner_rate = (inner - self._interp(series, t_in - self.sign * dt)) / dt
                # Hermite in s with s=0 at t_in, s=1 at the split;
                # d/ds = (time slope) * sign * dt
                s = 1.0 - u / dt
                h00 = 2 * s**3 - 3 * s**2 + 1
                h10 = s**3 - 2 * s**2 + s
                h01 = -2 * s**3 + 3 * s**2
                h11 = s**3 - s**2
                d_in = dt * inner_rate          # sign^2 folds to +1
                d_sp = self.sign * dt * rate
                return (h00 * inner + h10 * d_in + h01 * split_val + h11 * d_sp)
            return self._interp(series, t)
        return split_val + rate * (t - self.T)

    def sample(self, t: float) -> RefSample:
        rec = self.rec
        arm = self.arm
        if self._recorded_region(t):
            f = self._interp(rec.f_r, t)
            v = self._interp(rec.v, t)
            R = self._interp_R(t)
            xidot = float(self._interp(rec.xidot, t))
            beta = float(self._interp(rec.beta, t))
        else:
            f = self.f_split.copy()
            v = self.v_split.copy()
            R = self.R_split @ exp_so3(self.v_split[3:] * (t - self.T))
            xidot = self.xidot_split
            beta = self.beta_split
        p = self._pos_scalar(t, self.p_split, self.v_split[:3], rec.p)
        xi = float(self._pos_scalar(t, self.xi_split, self.xidot_split, rec.xi))
        return RefSample(f=np.asarray(f, float), v=np.asarray(v, float),
                         p=np.asarray(p, float), R=R, xi=xi, xidot=xidot,
                         beta=beta)


@dataclass
class ExtendedReference:
    """Overlapping ante/post evaluators for every arm, defined at all t."""

    recording: Recording
    T_r: float
    dT_r: float
    filter_hz: float
    _sides: list = field(default_factory=list, repr=False)

    @property
    def T_a(self) -> float:
        return self.T_r - self.dT_r

    @property
    def T_p(self) -> float:
        return self.T_r + self.dT_r

    def ante(self, arm: int, t: float) -> RefSample:
        return self._sides[arm][0].sample(t)

    def post(self, arm: int, t: float) -> RefSample:
        return self._sides[arm][1].sample(t)


def _lowpass(series, fs, cutoff_hz):
    # zero-phase 2nd-order Butterworth along the time axis
    b, a = butter(2, cutoff_hz / (0.5 * fs))
    return filtfilt(b, a, series, axis=1)


def extend(rec: Recording, T_r: float, dT_r: float,
           filter_hz: float = 20.0) -> ExtendedReference:
    """Build the overlapping ante/post reference pair around ``T_r``."""
    T_a, T_p = T_r - dT_r, T_r + dT_r
    if not (T_a > rec.t[0] + dT_r):
        raise WindowOutOfRange(f"T_a = {T_a:.3f}s too close to the recording start")
    if not (T_p < rec.t[-1] - dT_r):
        raise WindowOutOfRange(f"T_p = {T_p:.3f}s too close to the recording end")

    fs = 1.0 / rec.dt
    v_f = _lowpass(rec.v, fs, filter_hz)
    xidot_f = _lowpass(rec.xidot, fs, filter_hz)

    def at(series, tq):
        i = int(np.clip(np.searchsorted(rec.t, tq - 1e-12), 0, len(rec.t) - 1))
        return series[:, i]

    ref = ExtendedReference(recording=rec, T_r=T_r, dT_r=dT_r, filter_hz=filter_hz)
    for arm in range(rec.n_arms):
        ante = _Side(rec, arm, T_a, +1, at(v_f, T_a)[arm].copy(),
                     float(at(xidot_f, T_a)[arm]))
        post = _Side(rec, arm, T_p, -1, at(v_f, T_p)[arm].copy(),
                     float(at(xidot_f, T_p)[arm]))
        ref._sides.append((ante, post))
    return ref


# ---------------------------------------------------------------------------
# serialization (documented layout, lossless float64)
# ---------------------------------------------------------------------------

def _recording_payload(rec: Recording) -> dict:
    return dict(dt=rec.dt, t=rec.t, p=rec.p, quat=rec.quat, v=rec.v, xi=rec.xi,
                xidot=rec.xidot, f_r=rec.f_r, beta=rec.beta, q=rec.q, dq=rec.dq,
                f_est=rec.f_est, n_arms=rec.n_arms)


def save_recording(rec: Recording, path) -> None:
    np.savez(path, schema=RECORDING_SCHEMA, **_recording_payload(rec))


def save_reference(ref: ExtendedReference, path) -> None:
    np.savez(path, schema=REFERENCE_SCHEMA, T_r=ref.T_r, dT_r=ref.dT_r,
             filter_hz=ref.filter_hz, **_recording_payload(ref.recording))


def _load_npz(path, expected_schema):
    try:
        data = np.load(path, allow_pickle=False)
    except Exception as exc:
        raise CorruptFile(f"cannot read {path}: {exc}") from exc
    if "schema" not in data:
        raise CorruptFile(f"{path} has no schema field")
    schema = str(data["schema"])
    if schema != expected_schema:
        raise SchemaVersionMismatch(f"expected {expected_schema!r}, found {schema!r}")
    return data


def _recording_from(data) -> Recording:
    try:
        return Recording(dt=float(data["dt"]), t=data["t"], p=data["p"],
                         quat=data["quat"], v=data["v"], xi=data["xi"],
                         xidot=data["xidot"], f_r=data["f_r"], beta=data["beta"],
                         q=data["q"], dq=data["dq"], f_est=data["f_est"])
    except KeyError as exc:
        raise CorruptFile(f"missing field {exc}") from exc


def load_recording(path) -> Recording:
    return _recording_from(_load_npz(path, RECORDING_SCHEMA))


def load_reference(path) -> ExtendedReference:
    data = _load_npz(path, REFERENCE_SCHEMA)
    rec = _recording_from(data)
    return extend(rec, float(data["T_r"]), float(data["dT_r"]),
                  filter_hz=float(data["filter_hz"]))
