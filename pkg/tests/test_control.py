import numpy as np

from rsqp.control import (
    ArmSnapshot,
    ControllerConfig,
    Mode,
    ModeState,
    OperatorCommand,
    RsController,
    Variant,
    damping_from,
    geodesic_blend,
    impedance_wrench,
    interim_posture_accel,
    interim_wrench,
    posture_accel,
    supervisor_step,
)
from rsqp.detection import DetectionEvent
from rsqp.dynamics import EEKinematics, bias, ee_kinematics, mass_matrix
from rsqp.liegroup import exp_so3, rot_z
from rsqp.model import RobotState
from rsqp.reference import RefSample, RsParams

from conftest import make_arm


def random_kin(rng, v_scale=0.5):
    return EEKinematics(
        p=rng.normal(0, 0.3, 3),
        R=exp_so3(rng.normal(0, 0.5, 3)),
        v=rng.normal(0, v_scale, 6),
        J=rng.normal(size=(6, 7)),
        dJdq=rng.normal(0, 0.1, 6),
    )


def random_ref_sample(rng, near_R=None):
    R = (near_R if near_R is not None else np.eye(3)) @ exp_so3(rng.normal(0, 0.2, 3))
    return RefSample(
        f=rng.normal(0, 8, 6),
        v=rng.normal(0, 0.4, 6),
        p=rng.normal(0, 0.3, 3),
        R=R,
        xi=float(rng.normal(0, 0.5)),
        xidot=float(rng.normal(0, 0.3)),
        beta=float(rng.normal(0, 2.0)),
    )


K_HIGH = np.diag([2000.0, 2000, 2000, 20, 20, 20])
K_LOW = np.diag([300.0, 300, 300, 10, 10, 10])


def random_spd(rng, n=6, scale=3.0):
    B = rng.normal(size=(n, n))
    return B @ B.T / n + scale * np.eye(n)


# ---------------------------------------------------------------------------
# wrench laws
# ---------------------------------------------------------------------------

def test_impedance_zero_on_reference():
    rng = np.random.default_rng(0)
    kin = random_kin(rng)
    D = damping_from(K_HIGH, random_spd(rng))
    f = impedance_wrench(kin.p, kin.R, kin.v, np.zeros(6), kin, K_HIGH, D)
    assert np.allclose(f, 0.0, atol=1e-12)


def test_impedance_pure_offset_table_gain():
    # 1 cm y offset at stiffness 2000 -> 20 N in y, nothing else
    rng = np.random.default_rng(1)
    kin = EEKinematics(p=np.zeros(3), R=np.eye(3), v=np.zeros(6),
                       J=np.zeros((6, 7)), dJdq=np.zeros(6))
    D = damping_from(K_HIGH, random_spd(rng))
    f = impedance_wrench(np.array([0.0, 0.01, 0.0]), np.eye(3), np.zeros(6),
                         np.zeros(6), kin, K_HIGH, D)
    assert np.isclose(f[1], 20.0, atol=1e-12)
    f_other = np.delete(f, 1)
    assert np.allclose(f_other, 0.0, atol=1e-12)


def test_recording_vs_ante_gain_scaling():
    # same state and reference: spring terms scale with the stiffness ratio
    kin = EEKinematics(p=np.zeros(3), R=np.eye(3), v=np.zeros(6),
                       J=np.zeros((6, 7)), dJdq=np.zeros(6))
    D0 = np.zeros((6, 6))
    p_d = np.array([0.004, -0.02, 0.01])
    f_low = impedance_wrench(p_d, np.eye(3), np.zeros(6), np.zeros(6), kin, K_LOW, D0)
    f_high = impedance_wrench(p_d, np.eye(3), np.zeros(6), np.zeros(6), kin, K_HIGH, D0)
    assert np.allclose(f_high[:3], f_low[:3] * 2000.0 / 300.0, atol=1e-12)


def test_scalar_axis_critically_damped():
    # 1-DOF closed loop lam*s^2 + D*s + k: discriminant D^2 - 4*lam*k = 0
    lam = np.array([[2.7]])
    k = np.array([[350.0]])
    D = damping_from(k, lam)
    disc = D[0, 0] ** 2 - 4.0 * lam[0, 0] * k[0, 0]
    assert abs(disc) < 1e-9


def test_damping_symmetric_psd():
    rng = np.random.default_rng(2)
    for _ in range(20):
        D = damping_from(K_HIGH, random_spd(rng))
        assert np.allclose(D, D.T, atol=1e-10)
        assert np.linalg.eigvalsh(D)[0] > -1e-10


# ---------------------------------------------------------------------------
# interim endpoint identities (to 1e-12, the acceptance tolerance)
# ---------------------------------------------------------------------------

def test_interim_gamma0_equals_ante_without_velocity_feedback():
    rng = np.random.default_rng(3)
    for _ in range(1000):
        kin = random_kin(rng)
        sa = random_ref_sample(rng, near_R=kin.R)
        sp = random_ref_sample(rng, near_R=kin.R)
        D = damping_from(K_HIGH, random_spd(rng))
        f_int = interim_wrench(sa, sp, kin, 0.0, K_HIGH, D)
        # ante law with the velocity term deleted == ante law tracking v itself
        f_ante_novel = impedance_wrench(sa.p, sa.R, kin.v, sa.f, kin, K_HIGH, D)
        assert np.allclose(f_int, f_ante_novel, atol=1e-12)


def test_interim_gamma1_equals_post():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        kin = random_kin(rng)
        sa = random_ref_sample(rng, near_R=kin.R)
        sp = random_ref_sample(rng, near_R=kin.R)
        D = damping_from(K_HIGH, random_spd(rng))
        f_int = interim_wrench(sa, sp, kin, 1.0, K_HIGH, D)
        f_post = impedance_wrench(sp.p, sp.R, sp.v, sp.f, kin, K_HIGH, D)
        assert np.allclose(f_int, f_post, atol=1e-12)


def test_geodesic_midpoint():
    R_int = geodesic_blend(np.eye(3), rot_z(0.2), 0.5)
    assert np.allclose(R_int, rot_z(0.1), atol=1e-12)


# ---------------------------------------------------------------------------
# posture task
# ---------------------------------------------------------------------------

def test_posture_zero_on_reference():
    assert posture_accel(0.3, 0.1, 0.0, 0.3, 0.1, 500.0) == 0.0


def test_posture_offset_gain():
    # 0.1 rad offset at k = 500 -> 50 rad/s^2
    assert np.isclose(posture_accel(0.4, 0.0, 0.0, 0.3, 0.0, 500.0), 50.0)


def test_interim_posture_gamma0():
    rng = np.random.default_rng(5)
    for _ in range(100):
        sa = random_ref_sample(rng)
        sp = random_ref_sample(rng)
        xi, xid = rng.normal(), rng.normal()
        b_int = interim_posture_accel(sa, sp, xi, xid, 0.0, 500.0)
        # ante posture with velocity feedback removed
        b_ante_novel = posture_accel(sa.xi, xid, sa.beta, xi, xid, 500.0)
        assert np.isclose(b_int, b_ante_novel, atol=1e-12)
        b_int1 = interim_posture_accel(sa, sp, xi, xid, 1.0, 500.0)
        b_post = posture_accel(sp.xi, sp.xidot, sp.beta, xi, xid, 500.0)
        assert np.isclose(b_int1, b_post, atol=1e-12)


# ---------------------------------------------------------------------------
# supervisor
# ---------------------------------------------------------------------------

def run_supervisor(variant, event_time, T_r=2.0, rs=None, t_end=3.0):
    rs = rs or RsParams()
    st = ModeState(mode=Mode.ANTE)
    trace = []
    dt = rs.dt
    for k in range(int(t_end / dt)):
        t = k * dt
        ev = DetectionEvent(arm=0, time=t) if (event_time is not None
                                               and abs(t - event_time) < dt / 2) else None
        st = supervisor_step(st, t, ev, variant, rs, T_r)
        trace.append((t, st.mode, st.gamma))
    return trace


def test_supervisor_proposed_timing():
    trace = run_supervisor(Variant.PROPOSED, event_time=1.95)
    modes = {m for _, m, _ in trace}
    assert modes == {Mode.ANTE, Mode.INTERIM, Mode.POST}
    t_int = min(t for t, m, _ in trace if m == Mode.INTERIM)
    t_post = min(t for t, m, _ in trace if m == Mode.POST)
    assert np.isclose(t_int, 1.95, atol=1e-9)
    assert np.isclose(t_post, 2.05, atol=1e-9)
    # gamma ramps 0 -> 1 inside the interim window
    gammas = [g for t, m, g in trace if m == Mode.INTERIM]
    assert gammas[0] == 0.0 and gammas == sorted(gammas)


def test_supervisor_no_rs_ignores_detection():
    trace = run_supervisor(Variant.NO_RS, event_time=1.5, T_r=2.0)
    t_post = min(t for t, m, _ in trace if m == Mode.POST)
    assert np.isclose(t_post, 2.0, atol=1e-9)
    assert not any(m == Mode.INTERIM for _, m, _ in trace)


def test_supervisor_no_interim_switches_at_detection():
    trace = run_supervisor(Variant.NO_INTERIM, event_time=1.9, T_r=2.0)
    t_post = min(t for t, m, _ in trace if m == Mode.POST)
    assert np.isclose(t_post, 1.9, atol=1e-9)
    assert not any(m == Mode.INTERIM for _, m, _ in trace)


def test_supervisor_transitions_monotone_once():
    for variant, ev in ((Variant.PROPOSED, 1.7), (Variant.NO_RS, None),
                        (Variant.NO_INTERIM, 2.2)):
        trace = run_supervisor(variant, event_time=ev)
        order = {Mode.ANTE: 0, Mode.INTERIM: 1, Mode.POST: 2}
        seq = [order[m] for _, m, _ in trace]
        assert all(a <= b for a, b in zip(seq, seq[1:]))


# ---------------------------------------------------------------------------
# full control step
# ---------------------------------------------------------------------------

def snapshot_from_state(model, state):
    return ArmSnapshot(kin=ee_kinematics(model, state),
                       M=mass_matrix(model, state.q),
                       h=bias(model, state.q, state.dq),
                       q=state.q.copy(), dq=state.dq.copy())


class StationaryRef:
    """Reference frozen at given poses: ante == post == the hold pose."""

    def __init__(self, samples):
        self.samples = samples

    def ante(self, arm, t):
        return self.samples[arm]

    def post(self, arm, t):
        return self.samples[arm]


def hold_sample(kin, xi):
    return RefSample(f=np.zeros(6), v=np.zeros(6), p=kin.p.copy(),
                     R=kin.R.copy(), xi=xi, xidot=0.0, beta=0.0)


def make_pair():
    return [make_arm(7, base_p=(0.0, 0.9, 0.0)),
            make_arm(7, base_p=(0.0, -0.9, 0.0))]


def test_control_step_rest_on_reference_is_gravity_torque():
    models = make_pair()
    q0 = np.linspace(-0.5, 0.7, 7)
    snaps = [snapshot_from_state(m, RobotState(q0, np.zeros(7))) for m in models]
    ref = StationaryRef([hold_sample(s.kin, float(q0[0])) for s in snaps])
    ctrl = RsController(models, ControllerConfig())
    out = ctrl.step(snaps, ModeState(mode=Mode.ANTE), 0.0, ref=ref)
    assert not out.fallback
    for i, m in enumerate(models):
        assert np.allclose(out.tau[i], snaps[i].h, atol=1e-6)


def test_control_step_torque_limit_clipped_exactly():
    models = make_pair()
    q0 = np.linspace(-0.5, 0.7, 7)
    snaps = [snapshot_from_state(m, RobotState(q0, np.zeros(7))) for m in models]
    # aggressive far-away target activates the torque rows
    far = [RefSample(f=np.zeros(6), v=np.zeros(6),
                     p=s.kin.p + np.array([0.0, -0.5, 0.4]), R=s.kin.R,
                     xi=float(q0[0]), xidot=0.0, beta=0.0) for s in snaps]
    ctrl = RsController(models, ControllerConfig())
    out = ctrl.step(snaps, ModeState(mode=Mode.ANTE), 0.0, ref=StationaryRef(far))
    assert not out.fallback
    hit_any = False
    for i, m in enumerate(models):
        assert np.all(np.abs(out.tau[i]) <= m.tau_max + 1e-6)
        hit_any = hit_any or np.any(np.isclose(np.abs(out.tau[i]), m.tau_max, atol=1e-6))
    assert hit_any


def test_control_step_recording_mode_tracks_command():
    models = make_pair()
    q0 = np.linspace(-0.5, 0.7, 7)
    snaps = [snapshot_from_state(m, RobotState(q0, np.zeros(7))) for m in models]
    cmd = OperatorCommand(
        p=np.stack([s.kin.p + [0, 0.01, 0] for s in snaps]),
        R=np.stack([s.kin.R for s in snaps]),
        v=np.zeros((2, 6)),
        xi=np.full(2, float(q0[0])),
        xidot=np.zeros(2),
    )
    ctrl = RsController(models, ControllerConfig())
    out = ctrl.step(snaps, ModeState(mode=Mode.RECORDING), 0.0, command=cmd)
    assert not out.fallback
    # recording stiffness 300 * 0.01 m = 3 N desired in y
    assert np.allclose(out.f_des[:, 1], 3.0, atol=1e-9)


def test_warm_start_reuses_active_set():
    models = make_pair()
    q0 = np.linspace(-0.5, 0.7, 7)
    snaps = [snapshot_from_state(m, RobotState(q0, np.zeros(7))) for m in models]
    ref = StationaryRef([hold_sample(s.kin, float(q0[0])) for s in snaps])
    ctrl = RsController(models, ControllerConfig())
    out1 = ctrl.step(snaps, ModeState(mode=Mode.ANTE), 0.0, ref=ref)
    out2 = ctrl.step(snaps, ModeState(mode=Mode.ANTE), 0.001, ref=ref)
    assert out2.qp_iterations <= out1.qp_iterations
    assert out2.qp_iterations <= 2
