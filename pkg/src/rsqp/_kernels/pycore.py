"""Pure-NumPy compute kernels: the readable reference implementation.

The compiled extension (``_core``) mirrors every function here with the
same argument layout and arithmetic, so an equivalence test between the
two backends pins both down. All frames follow one convention: twists
are world-orientation-aligned, anchored at the frame origin
([linear m/s; angular rad/s]).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _rot_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    # Rodrigues for a unit axis
    c, s = np.cos(angle), np.sin(angle)
    x, y, z = axis
    C = 1.0 - c
    return np.array([
        [c + x * x * C, x * y * C - z * s, x * z * C + y * s],
        [y * x * C + z * s, c + y * y * C, y * z * C - x * s],
        [z * x * C - y * s, z * y * C + x * s, c + z * z * C],
    ])


def fk(chain_args, q):
    """World pose of every joint frame plus the end effector.

    Returns (p (n,3), R (n,3,3), z (n,3) world joint axes, p_e (3), R_e (3,3)).
    """
    axis, origin_p, origin_R, mass, com, inertia, ee_p, ee_R, base_p, base_R = chain_args
    n = axis.shape[0]
    p = np.empty((n, 3))
    R = np.empty((n, 3, 3))
    z = np.empty((n, 3))
    Rp, pp = base_R, base_p
    for j in range(n):
        Rpre = Rp @ origin_R[j]
        p[j] = pp + Rp @ origin_p[j]
        R[j] = Rpre @ _rot_axis(axis[j], q[j])
        z[j] = R[j] @ axis[j]
        Rp, pp = R[j], p[j]
    p_e = p[n - 1] + R[n - 1] @ ee_p
    R_e = R[n - 1] @ ee_R
    return p, R, z, p_e, R_e


def ee_state(chain_args, q, dq):
    """End-effector kinematics bundle.

    Returns (p_e, R_e, J (6,n), v (6,), djdq (6,)) with J the world-aligned
    geometric Jacobian at the EE origin and djdq the Jdot*qdot bias term.
    """
    axis = chain_args[0]
    n = axis.shape[0]
    p, R, z, p_e, R_e = fk(chain_args, q)

    # velocity propagation: w_j of link j, vo_j of joint-j origin
    w = np.zeros((n, 3))
    vo = np.zeros((n, 3))
    w_prev = np.zeros(3)
    vo_prev = np.zeros(3)
    p_prev = chain_args[8]  # base_p
    for j in range(n):
        vo[j] = vo_prev + np.cross(w_prev, p[j] - p_prev)
        w[j] = w_prev + z[j] * dq[j]
        w_prev, vo_prev, p_prev = w[j], vo[j], p[j]
    v_e_lin = vo[n - 1] + np.cross(w[n - 1], p_e - p[n - 1])
    v = np.concatenate([v_e_lin, w[n - 1]])

    J = np.empty((6, n))
    for j in range(n):
        J[:3, j] = np.cross(z[j], p_e - p[j])
        J[3:, j] = z[j]

    # djdq = sum_j dq_j * d/dt(column j)
    djdq = np.zeros(6)
    for j in range(n):
        zdot = np.cross(w[j], z[j])
        pdot_j = vo[j]
        djdq[:3] += dq[j] * (np.cross(zdot, p_e - p[j]) + np.cross(z[j], v_e_lin - pdot_j))
        djdq[3:] += dq[j] * zdot
    return p_e, R_e, J, v, djdq


def mass_matrix(chain_args, q):
    """Joint-space mass matrix via the composite-rigid-body recursion."""
    axis, origin_p, origin_R, mass, com, inertia, ee_p, ee_R, base_p, base_R = chain_args
    n = axis.shape[0]
    p, R, z, _, _ = fk(chain_args, q)

    com_w = np.empty((n, 3))
    I_w = np.empty((n, 3, 3))
    for j in range(n):
        com_w[j] = p[j] + R[j] @ com[j]
        I_w[j] = R[j] @ inertia[j] @ R[j].T

    # composite bodies accumulated tip -> base
    m_c = np.empty(n)
    com_c = np.empty((n, 3))
    I_c = np.empty((n, 3, 3))
    m_c[n - 1] = mass[n - 1]
    com_c[n - 1] = com_w[n - 1]
    I_c[n - 1] = I_w[n - 1]
    for j in range(n - 2, -1, -1):
        m_c[j] = mass[j] + m_c[j + 1]
        com_c[j] = (mass[j] * com_w[j] + m_c[j + 1] * com_c[j + 1]) / m_c[j]
        d1 = com_w[j] - com_c[j]
        d2 = com_c[j + 1] - com_c[j]
        I_c[j] = (
            I_w[j] + mass[j] * (np.dot(d1, d1) * np.eye(3) - np.outer(d1, d1))
            + I_c[j + 1] + m_c[j + 1] * (np.dot(d2, d2) * np.eye(3) - np.outer(d2, d2))
        )

    M = np.zeros((n, n))
    for j in range(n):
        # unit qdd_j: composite j pivots about joint j
        F = m_c[j] * np.cross(z[j], com_c[j] - p[j])
        N = I_c[j] @ z[j]
        for k in range(j + 1):
            M[k, j] = z[k] @ (N + np.cross(com_c[j] - p[k], F))
            M[j, k] = M[k, j]
    return M


def rnea(chain_args, q, dq, qdd, gravity):
    """Inverse dynamics (world-frame recursive Newton-Euler).

    Returns tau with M qdd + h = tau convention; gravity enters as a
    fictitious base acceleration.
    """
    axis, origin_p, origin_R, mass, com, inertia, ee_p, ee_R, base_p, base_R = chain_args
    n = axis.shape[0]
    p, R, z, _, _ = fk(chain_args, q)

    w = np.empty((n, 3))
    alpha = np.empty((n, 3))
    a_o = np.empty((n, 3))      # joint-origin linear acceleration
    w_prev = np.zeros(3)
    alpha_prev = np.zeros(3)
    a_prev = -np.asarray(gravity, dtype=float)
    p_prev = base_p
    for j in range(n):
        dp = p[j] - p_prev
        a_o[j] = a_prev + np.cross(alpha_prev, dp) + np.cross(w_prev, np.cross(w_prev, dp))
        zdot = np.cross(w_prev, z[j])
        w[j] = w_prev + z[j] * dq[j]
        alpha[j] = alpha_prev + zdot * dq[j] + z[j] * qdd[j]
        w_prev, alpha_prev, a_prev, p_prev = w[j], alpha[j], a_o[j], p[j]

    F = np.empty((n, 3))
    N = np.empty((n, 3))
    for j in range(n):
        c_w = p[j] + R[j] @ com[j]
        r = c_w - p[j]
        a_c = a_o[j] + np.cross(alpha[j], r) + np.cross(w[j], np.cross(w[j], r))
        I_w = R[j] @ inertia[j] @ R[j].T
        F[j] = mass[j] * a_c
        N[j] = I_w @ alpha[j] + np.cross(w[j], I_w @ w[j])

    tau = np.empty(n)
    f_child = np.zeros(3)
    n_child = np.zeros(3)       # moment about the child joint origin
    for j in range(n - 1, -1, -1):
        c_w = p[j] + R[j] @ com[j]
        n_j = N[j] + np.cross(c_w - p[j], F[j])
        if j < n - 1:
            n_j += n_child + np.cross(p[j + 1] - p[j], f_child)
        f_j = F[j] + f_child
        tau[j] = z[j] @ n_j
        f_child, n_child = f_j, n_j
    return tau


def bias(chain_args, q, dq, gravity):
    n = chain_args[0].shape[0]
    return rnea(chain_args, q, dq, np.zeros(n), gravity)


def fd(chain_args, q, dq, tau, f_ext, gravity):
    """Forward dynamics: qdd from M qdd + h = tau + J^T f_ext."""
    _, _, J, _, _ = ee_state(chain_args, q, dq)
    M = mass_matrix(chain_args, q)
    h = bias(chain_args, q, dq, gravity)
    rhs = tau + J.T @ np.asarray(f_ext, dtype=float) - h
    return np.linalg.solve(M, rhs)


def coriolis_transpose_dq(chain_args, q, dq, eps: float = 1e-6):
    """(C^T dq)_j = d/dq_j of the kinetic energy, by central differences.

    Needed by the momentum observer; exact C^T would require Christoffel
    symbols, which the FD of T(q) = dq^T M(q) dq / 2 replaces at O(eps^2).
    """
    n = len(q)
    out = np.empty(n)
    qp = np.array(q, dtype=float)
    for j in range(n):
        qj = qp[j]
        qp[j] = qj + eps
        Tp = 0.5 * dq @ mass_matrix(chain_args, qp) @ dq
        qp[j] = qj - eps
        Tm = 0.5 * dq @ mass_matrix(chain_args, qp) @ dq
        qp[j] = qj
        out[j] = (Tp - Tm) / (2.0 * eps)
    return out


# ---------------------------------------------------------------------------
# contact + fused world stepping
# ---------------------------------------------------------------------------

def _box_R(yaw):
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def pad_contact(p_pad, v_pad6, box_state, half_extents, cparams):
    """One pad sphere against the box.

    Returns (delta, fn, ft, flag, force_on_pad (3,), contact_point (3,)).
    The pad linear velocity is taken at the sphere center; the box surface
    point moves with the box twist.
    """
    radius, k_c, c_c, mu, eps_v = cparams
    bp = box_state[0:3]
    yaw = box_state[3]
    bv = box_state[4:7]
    wz = box_state[7]
    Rb = _box_R(yaw)

    c_local = Rb.T @ (p_pad - bp)
    clamped = np.clip(c_local, -half_extents, half_extents)
    d_local = c_local - clamped
    dist2 = d_local @ d_local
    if dist2 > 0.0:
        dist = np.sqrt(dist2)
        n_local = d_local / dist
    else:
        # center inside the box: resolve to the nearest face
        gaps = half_extents - np.abs(c_local)
        k = int(np.argmin(gaps))
        dist = -gaps[k]
        n_local = np.zeros(3)
        n_local[k] = 1.0 if c_local[k] >= 0.0 else -1.0
        clamped = c_local.copy()
        clamped[k] = half_extents[k] * n_local[k]
    delta = radius - dist
    if delta <= 0.0:
        return 0.0, 0.0, 0.0, False, np.zeros(3), np.zeros(3)

    n_w = Rb @ n_local
    p_c = bp + Rb @ clamped
    v_box_pt = bv + np.cross(np.array([0.0, 0.0, wz]), p_c - bp)
    v_rel = v_pad6[:3] - v_box_pt
    ddot = -(v_rel @ n_w)
    fn = k_c * delta + c_c * ddot
    if fn <= 0.0:
        return float(delta), 0.0, 0.0, True, np.zeros(3), p_c
    v_t = v_rel - (v_rel @ n_w) * n_w
    vt_norm = np.linalg.norm(v_t)
    ft = mu * fn * np.tanh(vt_norm / eps_v)
    force = fn * n_w
    if vt_norm > 1e-12:
        force = force - ft * (v_t / vt_norm)
    return float(delta), float(fn), float(ft), True, force, p_c


def plane_wrench(box_state, mass, half_extents, plane_h, pparams, gravity_z):
    """Support-plane force (z) plus horizontal/yaw friction on the box."""
    k_p, c_p, mu_p, r_eff, eps_v = pparams
    pz = box_state[2]
    vz = box_state[6]
    delta = plane_h - (pz - half_extents[2])
    f = np.zeros(3)
    tau_z = 0.0
    if delta > 0.0:
        fn = k_p * delta + c_p * (-vz)
        if fn > 0.0:
            f[2] = fn
            v_xy = box_state[4:6]
            sp = np.linalg.norm(v_xy)
            if sp > 1e-12:
                f[0:2] = -mu_p * fn * np.tanh(sp / eps_v) * (v_xy / sp)
            wz = box_state[7]
            tau_z = -mu_p * fn * r_eff * np.tanh(wz * r_eff / eps_v)
    return f, tau_z


def world_step(chain_args_1, chain_args_2, q1, dq1, q2, dq2, tau1, tau2,
               box_state, box_mass, half_extents, box_izz, plane_h,
               cparams, pparams, gravity, h, n_sub):
    """Advance both arms and the box by ``n_sub`` substeps of size ``h``.

    Torques are held constant (zero-order hold over one control period).
    State arrays are modified in place. Returns a dict snapshot of the
    final substep's contact data plus first-contact substep indices.
    """
    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    first_contact = np.array([-1, -1], dtype=np.int64)
    snap = None
    chains = [chain_args_1, chain_args_2]
    qs = [q1, q2]
    dqs = [dq1, dq2]
    taus = [tau1, tau2]

    for step in range(n_sub):
        pad_wrench = np.zeros((2, 6))
        pad_delta = np.zeros(2)
        pad_fn = np.zeros(2)
        pad_ft = np.zeros(2)
        pad_flag = np.zeros(2, dtype=bool)
        box_force = np.zeros(3)
        box_tau_z = 0.0

        kins = []
        for i in range(2):
            p_e, R_e, J, v, _ = ee_state(chains[i], qs[i], dqs[i])
            kins.append((p_e, R_e, J, v))
            delta, fn, ft, flag, force, p_c = pad_contact(
                p_e, v, box_state, half_extents, cparams)
            pad_delta[i] = delta
            pad_fn[i] = fn
            pad_ft[i] = ft
            pad_flag[i] = flag
            if flag and first_contact[i] < 0:
                first_contact[i] = step
            if flag:
                pad_wrench[i, :3] = force
                pad_wrench[i, 3:] = np.cross(p_c - p_e, force)
                box_force -= force
                box_tau_z -= float(np.cross(p_c - box_state[0:3], force)[2])

        pf, ptz = plane_wrench(box_state, box_mass, half_extents, plane_h,
                               pparams, gravity[2])
        box_force += pf + box_mass * gravity
        box_tau_z += ptz

        for i in range(2):
            qdd = fd(chains[i], qs[i], dqs[i], taus[i], pad_wrench[i], gravity)
            dqs[i] += h * qdd
            qs[i] += h * dqs[i]

        box_state[4:7] += h * (box_force / box_mass)
        box_state[7] += h * (box_tau_z / box_izz)
        box_state[0:3] += h * box_state[4:7]
        box_state[3] += h * box_state[7]

        if step == n_sub - 1:
            snap = {
                "pad_wrench": pad_wrench,
                "pad_delta": pad_delta,
                "pad_fn": pad_fn,
                "pad_ft": pad_ft,
                "pad_flag": pad_flag,
                "box_force": box_force,
                "box_tau_z": box_tau_z,
            }
    snap["first_contact"] = first_contact
    return snap
