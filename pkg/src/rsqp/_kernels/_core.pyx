# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled compute kernels (hot path).

Mirrors ``pycore`` exactly: same functions, argument layout, and
arithmetic. The pure-Python module is the readable reference; this one
exists because the 10 kHz substep loop dominates runtime.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, tanh, fabs

cnp.import_array()

BACKEND = "cython"

DEF MAXN = 16


# ---------------------------------------------------------------------------
# small vector helpers
# ---------------------------------------------------------------------------

cdef inline void v_cross(const double* a, const double* b, double* out) noexcept nogil:
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]


cdef inline double v_dot(const double* a, const double* b) noexcept nogil:
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


cdef inline void m_vec(const double* R, const double* x, double* out) noexcept nogil:
    out[0] = R[0] * x[0] + R[1] * x[1] + R[2] * x[2]
    out[1] = R[3] * x[0] + R[4] * x[1] + R[5] * x[2]
    out[2] = R[6] * x[0] + R[7] * x[1] + R[8] * x[2]


cdef inline void mT_vec(const double* R, const double* x, double* out) noexcept nogil:
    out[0] = R[0] * x[0] + R[3] * x[1] + R[6] * x[2]
    out[1] = R[1] * x[0] + R[4] * x[1] + R[7] * x[2]
    out[2] = R[2] * x[0] + R[5] * x[1] + R[8] * x[2]


cdef inline void m_mul(const double* A, const double* B, double* out) noexcept nogil:
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = 0.0
            for k in range(3):
                out[3 * i + j] += A[3 * i + k] * B[3 * k + j]


cdef inline void m_rot_similarity(const double* R, const double* I, double* out) noexcept nogil:
    # out = R I R^T
    cdef double tmp[9]
    cdef int i, j, k
    for i in range(3):
        for j in range(3):
            tmp[3 * i + j] = 0.0
            for k in range(3):
                tmp[3 * i + j] += I[3 * i + k] * R[3 * j + k]
    for i in range(3):
        for j in range(3):
            out[3 * i + j] = 0.0
            for k in range(3):
                out[3 * i + j] += R[3 * i + k] * tmp[3 * k + j]


cdef inline void rot_axis(const double* a, double angle, double* out) noexcept nogil:
    cdef double c = cos(angle)
    cdef double s = sin(angle)
    cdef double C = 1.0 - c
    cdef double x = a[0], y = a[1], z = a[2]
    out[0] = c + x * x * C
    out[1] = x * y * C - z * s
    out[2] = x * z * C + y * s
    out[3] = y * x * C + z * s
    out[4] = c + y * y * C
    out[5] = y * z * C - x * s
    out[6] = z * x * C - y * s
    out[7] = z * y * C + x * s
    out[8] = z * z * C + c


# ---------------------------------------------------------------------------
# chain container
# ---------------------------------------------------------------------------

cdef struct Chain:
    int n
    const double* axis        # n*3
    const double* origin_p    # n*3
    const double* origin_R    # n*9
    const double* mass        # n
    const double* com         # n*3
    const double* inertia     # n*9
    const double* ee_p
    const double* ee_R
    const double* base_p
    const double* base_R


cdef class _ChainView:
    """Keeps the backing numpy arrays alive while a Chain struct points at them."""
    cdef object arrays
    cdef Chain c

    def __init__(self, chain_args):
        cdef cnp.ndarray a
        self.arrays = [np.ascontiguousarray(x, dtype=np.float64) for x in chain_args]
        a = self.arrays[0]
        self.c.n = <int>a.shape[0]
        if self.c.n > MAXN:
            raise ValueError("chain too long for compiled backend")
        self.c.axis = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[0])
        self.c.origin_p = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[1])
        self.c.origin_R = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[2])
        self.c.mass = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[3])
        self.c.com = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[4])
        self.c.inertia = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[5])
        self.c.ee_p = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[6])
        self.c.ee_R = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[7])
        self.c.base_p = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[8])
        self.c.base_R = <const double*>cnp.PyArray_DATA(<cnp.ndarray>self.arrays[9])


# ---------------------------------------------------------------------------
# kinematics / dynamics cores
# ---------------------------------------------------------------------------

cdef void c_fk(Chain* ch, const double* q, double* P, double* Rm, double* Z,
               double* p_e, double* R_e) noexcept nogil:
    cdef int j, n = ch.n
    cdef double Rpre[9]
    cdef double Rq[9]
    cdef double tmp[3]
    cdef const double* Rp = ch.base_R
    cdef const double* pp = ch.base_p
    for j in range(n):
        m_mul(Rp, &ch.origin_R[9 * j], Rpre)
        m_vec(Rp, &ch.origin_p[3 * j], tmp)
        P[3 * j] = pp[0] + tmp[0]
        P[3 * j + 1] = pp[1] + tmp[1]
        P[3 * j + 2] = pp[2] + tmp[2]
        rot_axis(&ch.axis[3 * j], q[j], Rq)
        m_mul(Rpre, Rq, &Rm[9 * j])
        m_vec(&Rm[9 * j], &ch.axis[3 * j], &Z[3 * j])
        Rp = &Rm[9 * j]
        pp = &P[3 * j]
    m_vec(&Rm[9 * (n - 1)], ch.ee_p, tmp)
    p_e[0] = P[3 * (n - 1)] + tmp[0]
    p_e[1] = P[3 * (n - 1) + 1] + tmp[1]
    p_e[2] = P[3 * (n - 1) + 2] + tmp[2]
    m_mul(&Rm[9 * (n - 1)], ch.ee_R, R_e)


cdef void c_ee_state(Chain* ch, const double* q, const double* dq,
                     double* p_e, double* R_e, double* J, double* v,
                     double* djdq) noexcept nogil:
    cdef int j, k, n = ch.n
    cdef double P[MAXN * 3]
    cdef double Rm[MAXN * 9]
    cdef double Z[MAXN * 3]
    cdef double W[MAXN * 3]
    cdef double VO[MAXN * 3]
    cdef double zero3[3]
    cdef double dp[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double t3[3]
    cdef const double* w_prev
    cdef const double* vo_prev
    cdef const double* p_prev

    c_fk(ch, q, P, Rm, Z, p_e, R_e)

    zero3[0] = zero3[1] = zero3[2] = 0.0
    w_prev = zero3
    vo_prev = zero3
    p_prev = ch.base_p
    for j in range(n):
        dp[0] = P[3 * j] - p_prev[0]
        dp[1] = P[3 * j + 1] - p_prev[1]
        dp[2] = P[3 * j + 2] - p_prev[2]
        v_cross(w_prev, dp, t1)
        VO[3 * j] = vo_prev[0] + t1[0]
        VO[3 * j + 1] = vo_prev[1] + t1[1]
        VO[3 * j + 2] = vo_prev[2] + t1[2]
        W[3 * j] = w_prev[0] + Z[3 * j] * dq[j]
        W[3 * j + 1] = w_prev[1] + Z[3 * j + 1] * dq[j]
        W[3 * j + 2] = w_prev[2] + Z[3 * j + 2] * dq[j]
        w_prev = &W[3 * j]
        vo_prev = &VO[3 * j]
        p_prev = &P[3 * j]

    cdef double v_lin[3]
    dp[0] = p_e[0] - P[3 * (n - 1)]
    dp[1] = p_e[1] - P[3 * (n - 1) + 1]
    dp[2] = p_e[2] - P[3 * (n - 1) + 2]
    v_cross(&W[3 * (n - 1)], dp, t1)
    v_lin[0] = VO[3 * (n - 1)] + t1[0]
    v_lin[1] = VO[3 * (n - 1) + 1] + t1[1]
    v_lin[2] = VO[3 * (n - 1) + 2] + t1[2]
    v[0] = v_lin[0]
    v[1] = v_lin[1]
    v[2] = v_lin[2]
    v[3] = W[3 * (n - 1)]
    v[4] = W[3 * (n - 1) + 1]
    v[5] = W[3 * (n - 1) + 2]

    for j in range(n):
        dp[0] = p_e[0] - P[3 * j]
        dp[1] = p_e[1] - P[3 * j + 1]
        dp[2] = p_e[2] - P[3 * j + 2]
        v_cross(&Z[3 * j], dp, t1)
        J[0 * n + j] = t1[0]
        J[1 * n + j] = t1[1]
        J[2 * n + j] = t1[2]
        J[3 * n + j] = Z[3 * j]
        J[4 * n + j] = Z[3 * j + 1]
        J[5 * n + j] = Z[3 * j + 2]

    for k in range(6):
        djdq[k] = 0.0
    for j in range(n):
        # zdot = w_j x z_j
        v_cross(&W[3 * j], &Z[3 * j], t1)
        dp[0] = p_e[0] - P[3 * j]
        dp[1] = p_e[1] - P[3 * j + 1]
        dp[2] = p_e[2] - P[3 * j + 2]
        v_cross(t1, dp, t2)
        t3[0] = v_lin[0] - VO[3 * j]
        t3[1] = v_lin[1] - VO[3 * j + 1]
        t3[2] = v_lin[2] - VO[3 * j + 2]
        v_cross(&Z[3 * j], t3, dp)
        djdq[0] += dq[j] * (t2[0] + dp[0])
        djdq[1] += dq[j] * (t2[1] + dp[1])
        djdq[2] += dq[j] * (t2[2] + dp[2])
        djdq[3] += dq[j] * t1[0]
        djdq[4] += dq[j] * t1[1]
        djdq[5] += dq[j] * t1[2]


cdef void c_crba(Chain* ch, const double* q, double* M) noexcept nogil:
    cdef int i, j, k, n = ch.n
    cdef double P[MAXN * 3]
    cdef double Rm[MAXN * 9]
    cdef double Z[MAXN * 3]
    cdef double p_e[3]
    cdef double R_e[9]
    cdef double com_w[MAXN * 3]
    cdef double I_w[MAXN * 9]
    cdef double m_c[MAXN]
    cdef double com_c[MAXN * 3]
    cdef double I_c[MAXN * 9]
    cdef double d1[3]
    cdef double d2[3]
    cdef double F[3]
    cdef double N[3]
    cdef double t1[3]
    cdef double dd

    c_fk(ch, q, P, Rm, Z, p_e, R_e)
    for j in range(n):
        m_vec(&Rm[9 * j], &ch.com[3 * j], t1)
        com_w[3 * j] = P[3 * j] + t1[0]
        com_w[3 * j + 1] = P[3 * j + 1] + t1[1]
        com_w[3 * j + 2] = P[3 * j + 2] + t1[2]
        m_rot_similarity(&Rm[9 * j], &ch.inertia[9 * j], &I_w[9 * j])

    m_c[n - 1] = ch.mass[n - 1]
    for k in range(3):
        com_c[3 * (n - 1) + k] = com_w[3 * (n - 1) + k]
    for k in range(9):
        I_c[9 * (n - 1) + k] = I_w[9 * (n - 1) + k]
    for j in range(n - 2, -1, -1):
        m_c[j] = ch.mass[j] + m_c[j + 1]
        for k in range(3):
            com_c[3 * j + k] = (ch.mass[j] * com_w[3 * j + k]
                                + m_c[j + 1] * com_c[3 * (j + 1) + k]) / m_c[j]
        for k in range(3):
            d1[k] = com_w[3 * j + k] - com_c[3 * j + k]
            d2[k] = com_c[3 * (j + 1) + k] - com_c[3 * j + k]
        dd = v_dot(d1, d1)
        for i in range(3):
            for k in range(3):
                I_c[9 * j + 3 * i + k] = (
                    I_w[9 * j + 3 * i + k]
                    + ch.mass[j] * ((dd if i == k else 0.0) - d1[i] * d1[k])
                    + I_c[9 * (j + 1) + 3 * i + k]
                    + m_c[j + 1] * ((v_dot(d2, d2) if i == k else 0.0) - d2[i] * d2[k])
                )

    for j in range(n):
        for k in range(3):
            d1[k] = com_c[3 * j + k] - P[3 * j + k]
        v_cross(&Z[3 * j], d1, t1)
        F[0] = m_c[j] * t1[0]
        F[1] = m_c[j] * t1[1]
        F[2] = m_c[j] * t1[2]
        m_vec(&I_c[9 * j], &Z[3 * j], N)
        for k in range(j + 1):
            d2[0] = com_c[3 * j] - P[3 * k]
            d2[1] = com_c[3 * j + 1] - P[3 * k + 1]
            d2[2] = com_c[3 * j + 2] - P[3 * k + 2]
            v_cross(d2, F, t1)
            t1[0] += N[0]
            t1[1] += N[1]
            t1[2] += N[2]
            M[k * n + j] = v_dot(&Z[3 * k], t1)
            M[j * n + k] = M[k * n + j]


cdef void c_rnea(Chain* ch, const double* q, const double* dq, const double* qdd,
                 const double* gravity, double* tau) noexcept nogil:
    cdef int j, k, n = ch.n
    cdef double P[MAXN * 3]
    cdef double Rm[MAXN * 9]
    cdef double Z[MAXN * 3]
    cdef double p_e[3]
    cdef double R_e[9]
    cdef double W[MAXN * 3]
    cdef double AL[MAXN * 3]
    cdef double AO[MAXN * 3]
    cdef double F[MAXN * 3]
    cdef double N[MAXN * 3]
    cdef double zero3[3]
    cdef double a0[3]
    cdef double dp[3]
    cdef double t1[3]
    cdef double t2[3]
    cdef double c_w[3]
    cdef double I_w[9]
    cdef double f_child[3]
    cdef double n_child[3]
    cdef double n_j[3]
    cdef double f_j[3]
    cdef const double* w_prev
    cdef const double* al_prev
    cdef const double* a_prev
    cdef const double* p_prev

    c_fk(ch, q, P, Rm, Z, p_e, R_e)

    zero3[0] = zero3[1] = zero3[2] = 0.0
    a0[0] = -gravity[0]
    a0[1] = -gravity[1]
    a0[2] = -gravity[2]
    w_prev = zero3
    al_prev = zero3
    a_prev = a0
    p_prev = ch.base_p
    for j in range(n):
        dp[0] = P[3 * j] - p_prev[0]
        dp[1] = P[3 * j + 1] - p_prev[1]
        dp[2] = P[3 * j + 2] - p_prev[2]
        v_cross(al_prev, dp, t1)
        v_cross(w_prev, dp, t2)
        v_cross(w_prev, t2, dp)
        AO[3 * j] = a_prev[0] + t1[0] + dp[0]
        AO[3 * j + 1] = a_prev[1] + t1[1] + dp[1]
        AO[3 * j + 2] = a_prev[2] + t1[2] + dp[2]
        v_cross(w_prev, &Z[3 * j], t1)
        for k in range(3):
            W[3 * j + k] = w_prev[k] + Z[3 * j + k] * dq[j]
            AL[3 * j + k] = al_prev[k] + t1[k] * dq[j] + Z[3 * j + k] * qdd[j]
        w_prev = &W[3 * j]
        al_prev = &AL[3 * j]
        a_prev = &AO[3 * j]
        p_prev = &P[3 * j]

    for j in range(n):
        m_vec(&Rm[9 * j], &ch.com[3 * j], t1)   # r = R com
        v_cross(&AL[3 * j], t1, t2)
        v_cross(&W[3 * j], t1, dp)
        v_cross(&W[3 * j], dp, t1)
        # a_com
        dp[0] = AO[3 * j] + t2[0] + t1[0]
        dp[1] = AO[3 * j + 1] + t2[1] + t1[1]
        dp[2] = AO[3 * j + 2] + t2[2] + t1[2]
        F[3 * j] = ch.mass[j] * dp[0]
        F[3 * j + 1] = ch.mass[j] * dp[1]
        F[3 * j + 2] = ch.mass[j] * dp[2]
        m_rot_similarity(&Rm[9 * j], &ch.inertia[9 * j], I_w)
        m_vec(I_w, &AL[3 * j], t1)
        m_vec(I_w, &W[3 * j], t2)
        v_cross(&W[3 * j], t2, dp)
        N[3 * j] = t1[0] + dp[0]
        N[3 * j + 1] = t1[1] + dp[1]
        N[3 * j + 2] = t1[2] + dp[2]

    f_child[0] = f_child[1] = f_child[2] = 0.0
    n_child[0] = n_child[1] = n_child[2] = 0.0
    for j in range(n - 1, -1, -1):
        m_vec(&Rm[9 * j], &ch.com[3 * j], c_w)   # com offset from joint origin
        v_cross(c_w, &F[3 * j], t1)
        n_j[0] = N[3 * j] + t1[0]
        n_j[1] = N[3 * j + 1] + t1[1]
        n_j[2] = N[3 * j + 2] + t1[2]
        if j < n - 1:
            dp[0] = P[3 * (j + 1)] - P[3 * j]
            dp[1] = P[3 * (j + 1) + 1] - P[3 * j + 1]
            dp[2] = P[3 * (j + 1) + 2] - P[3 * j + 2]
            v_cross(dp, f_child, t2)
            n_j[0] += n_child[0] + t2[0]
            n_j[1] += n_child[1] + t2[1]
            n_j[2] += n_child[2] + t2[2]
        f_j[0] = F[3 * j] + f_child[0]
        f_j[1] = F[3 * j + 1] + f_child[1]
        f_j[2] = F[3 * j + 2] + f_child[2]
        tau[j] = v_dot(&Z[3 * j], n_j)
        for k in range(3):
            f_child[k] = f_j[k]
            n_child[k] = n_j[k]


cdef int c_cholesky(int n, const double* A, double* L) noexcept nogil:
    # lower-triangular factor of a PD matrix; returns nonzero on failure
    cdef int i, j, k
    cdef double s
    for i in range(n):
        for j in range(i + 1):
            s = A[i * n + j]
            for k in range(j):
                s -= L[i * n + k] * L[j * n + k]
            if i == j:
                if s <= 0.0:
                    return 1
                L[i * n + i] = sqrt(s)
            else:
                L[i * n + j] = s / L[j * n + j]
    return 0


cdef void c_chol_solve(int n, const double* L, const double* b, double* x) noexcept nogil:
    cdef int i, k
    cdef double s
    for i in range(n):
        s = b[i]
        for k in range(i):
            s -= L[i * n + k] * x[k]
        x[i] = s / L[i * n + i]
    for i in range(n - 1, -1, -1):
        s = x[i]
        for k in range(i + 1, n):
            s -= L[k * n + i] * x[k]
        x[i] = s / L[i * n + i]


cdef int c_fd(Chain* ch, const double* q, const double* dq, const double* tau,
              const double* f_ext, const double* gravity, double* qdd) noexcept nogil:
    cdef int j, k, n = ch.n
    cdef double p_e[3]
    cdef double R_e[9]
    cdef double J[6 * MAXN]
    cdef double v[6]
    cdef double djdq[6]
    cdef double M[MAXN * MAXN]
    cdef double L[MAXN * MAXN]
    cdef double h[MAXN]
    cdef double rhs[MAXN]
    cdef double zero[MAXN]

    c_ee_state(ch, q, dq, p_e, R_e, J, v, djdq)
    c_crba(ch, q, M)
    for j in range(n):
        zero[j] = 0.0
    c_rnea(ch, q, dq, zero, gravity, h)
    for j in range(n):
        rhs[j] = tau[j] - h[j]
        for k in range(6):
            rhs[j] += J[k * n + j] * f_ext[k]
    if c_cholesky(n, M, L):
        return 1
    c_chol_solve(n, L, rhs, qdd)
    return 0


# ---------------------------------------------------------------------------
# contact
# ---------------------------------------------------------------------------

cdef void c_pad_contact(const double* p_pad, const double* v_pad6,
                        const double* box_state, const double* half_extents,
                        const double* cparams,
                        double* delta_out, double* fn_out, double* ft_out,
                        int* flag_out, double* force_out, double* pc_out) noexcept nogil:
    cdef double radius = cparams[0], k_c = cparams[1], c_c = cparams[2]
    cdef double mu = cparams[3], eps_v = cparams[4]
    cdef double yaw = box_state[3]
    cdef double cy = cos(yaw), sy = sin(yaw)
    cdef double rel[3]
    cdef double c_local[3]
    cdef double clamped[3]
    cdef double d_local[3]
    cdef double n_local[3]
    cdef double n_w[3]
    cdef double p_c[3]
    cdef double v_box_pt[3]
    cdef double v_rel[3]
    cdef double v_t[3]
    cdef double dist2, dist, gap, gmin, delta, ddot, fn, vtn, ft
    cdef int k, kmin

    delta_out[0] = 0.0
    fn_out[0] = 0.0
    ft_out[0] = 0.0
    flag_out[0] = 0
    for k in range(3):
        force_out[k] = 0.0
        pc_out[k] = 0.0

    rel[0] = p_pad[0] - box_state[0]
    rel[1] = p_pad[1] - box_state[1]
    rel[2] = p_pad[2] - box_state[2]
    # R^T rel for R = rot_z(yaw)
    c_local[0] = cy * rel[0] + sy * rel[1]
    c_local[1] = -sy * rel[0] + cy * rel[1]
    c_local[2] = rel[2]

    for k in range(3):
        clamped[k] = c_local[k]
        if clamped[k] > half_extents[k]:
            clamped[k] = half_extents[k]
        elif clamped[k] < -half_extents[k]:
            clamped[k] = -half_extents[k]
        d_local[k] = c_local[k] - clamped[k]
    dist2 = d_local[0] * d_local[0] + d_local[1] * d_local[1] + d_local[2] * d_local[2]
    if dist2 > 0.0:
        dist = sqrt(dist2)
        for k in range(3):
            n_local[k] = d_local[k] / dist
    else:
        gmin = 1e30
        kmin = 0
        for k in range(3):
            gap = half_extents[k] - fabs(c_local[k])
            if gap < gmin:
                gmin = gap
                kmin = k
        dist = -gmin
        for k in range(3):
            n_local[k] = 0.0
        n_local[kmin] = 1.0 if c_local[kmin] >= 0.0 else -1.0
        clamped[kmin] = half_extents[kmin] * n_local[kmin]
    delta = radius - dist
    if delta <= 0.0:
        return

    delta_out[0] = delta
    flag_out[0] = 1
    n_w[0] = cy * n_local[0] - sy * n_local[1]
    n_w[1] = sy * n_local[0] + cy * n_local[1]
    n_w[2] = n_local[2]
    p_c[0] = box_state[0] + cy * clamped[0] - sy * clamped[1]
    p_c[1] = box_state[1] + sy * clamped[0] + cy * clamped[1]
    p_c[2] = box_state[2] + clamped[2]
    pc_out[0] = p_c[0]
    pc_out[1] = p_c[1]
    pc_out[2] = p_c[2]

    # box surface point velocity: v + [0,0,wz] x (p_c - p_b)
    rel[0] = p_c[0] - box_state[0]
    rel[1] = p_c[1] - box_state[1]
    rel[2] = p_c[2] - box_state[2]
    v_box_pt[0] = box_state[4] - box_state[7] * rel[1]
    v_box_pt[1] = box_state[5] + box_state[7] * rel[0]
    v_box_pt[2] = box_state[6]
    for k in range(3):
        v_rel[k] = v_pad6[k] - v_box_pt[k]
    ddot = -v_dot(v_rel, n_w)
    fn = k_c * delta + c_c * ddot
    if fn <= 0.0:
        return
    fn_out[0] = fn
    for k in range(3):
        v_t[k] = v_rel[k] + ddot * n_w[k]
    vtn = sqrt(v_dot(v_t, v_t))
    ft = mu * fn * tanh(vtn / eps_v)
    ft_out[0] = ft
    for k in range(3):
        force_out[k] = fn * n_w[k]
    if vtn > 1e-12:
        for k in range(3):
            force_out[k] -= ft * (v_t[k] / vtn)


# ---------------------------------------------------------------------------
# python-visible wrappers
# ---------------------------------------------------------------------------

def fk(chain_args, q):
    cdef _ChainView cv = _ChainView(chain_args)
    cdef cnp.ndarray[double, ndim=1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef int n = cv.c.n
    P = np.empty((n, 3))
    Rm = np.empty((n, 3, 3))
    Z = np.empty((n, 3))
    p_e = np.empty(3)
    R_e = np.empty((3, 3))
    cdef double[:, ::1] Pv = P
    cdef double[:, :, ::1] Rv = Rm
    cdef double[:, ::1] Zv = Z
    cdef double[::1] pev = p_e
    cdef double[:, ::1] Rev = R_e
    c_fk(&cv.c, &qq[0], &Pv[0, 0], &Rv[0, 0, 0], &Zv[0, 0], &pev[0], &Rev[0, 0])
    return P, Rm, Z, p_e, R_e


def ee_state(chain_args, q, dq):
    cdef _ChainView cv = _ChainView(chain_args)
    cdef cnp.ndarray[double, ndim=1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dqq = np.ascontiguousarray(dq, dtype=np.float64)
    cdef int n = cv.c.n
    p_e = np.empty(3)
    R_e = np.empty((3, 3))
    J = np.empty((6, n))
    v = np.empty(6)
    djdq = np.empty(6)
    cdef double[::1] pev = p_e
    cdef double[:, ::1] Rev = R_e
    cdef double[:, ::1] Jv = J
    cdef double[::1] vv = v
    cdef double[::1] dv = djdq
    c_ee_state(&cv.c, &qq[0], &dqq[0], &pev[0], &Rev[0, 0], &Jv[0, 0], &vv[0], &dv[0])
    return p_e, R_e, J, v, djdq


def mass_matrix(chain_args, q):
    cdef _ChainView cv = _ChainView(chain_args)
    cdef cnp.ndarray[double, ndim=1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef int n = cv.c.n
    M = np.empty((n, n))
    cdef double[:, ::1] Mv = M
    c_crba(&cv.c, &qq[0], &Mv[0, 0])
    return M


def rnea(chain_args, q, dq, qdd, gravity):
    cdef _ChainView cv = _ChainView(chain_args)
    cdef cnp.ndarray[double, ndim=1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dqq = np.ascontiguousarray(dq, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] qdd_ = np.ascontiguousarray(qdd, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] g = np.ascontiguousarray(gravity, dtype=np.float64)
    tau = np.empty(cv.c.n)
    cdef double[::1] tv = tau
    c_rnea(&cv.c, &qq[0], &dqq[0], &qdd_[0], &g[0], &tv[0])
    return tau


def bias(chain_args, q, dq, gravity):
    return rnea(chain_args, q, dq, np.zeros(len(q)), gravity)


def fd(chain_args, q, dq, tau, f_ext, gravity):
    cdef _ChainView cv = _ChainView(chain_args)
    cdef cnp.ndarray[double, ndim=1] qq = np.ascontiguousarray(q, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dqq = np.ascontiguousarray(dq, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] tt = np.ascontiguousarray(tau, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] ff = np.ascontiguousarray(f_ext, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] g = np.ascontiguousarray(gravity, dtype=np.float64)
    qdd = np.empty(cv.c.n)
    cdef double[::1] qv = qdd
    if c_fd(&cv.c, &qq[0], &dqq[0], &tt[0], &ff[0], &g[0], &qv[0]):
        raise np.linalg.LinAlgError("mass matrix not positive definite")
    return qdd


def coriolis_transpose_dq(chain_args, q, dq, double eps=1e-6):
    cdef _ChainView cv = _ChainView(chain_args)
    cdef cnp.ndarray[double, ndim=1] qq = np.ascontiguousarray(q, dtype=np.float64).copy()
    cdef cnp.ndarray[double, ndim=1] dqq = np.ascontiguousarray(dq, dtype=np.float64)
    cdef int n = cv.c.n
    cdef int i, j, k
    cdef double M[MAXN * MAXN]
    cdef double qj, Tp, Tm
    out = np.empty(n)
    cdef double[::1] ov = out
    for j in range(n):
        qj = qq[j]
        qq[j] = qj + eps
        c_crba(&cv.c, &qq[0], M)
        Tp = 0.0
        for i in range(n):
            for k in range(n):
                Tp += dqq[i] * M[i * n + k] * dqq[k]
        qq[j] = qj - eps
        c_crba(&cv.c, &qq[0], M)
        Tm = 0.0
        for i in range(n):
            for k in range(n):
                Tm += dqq[i] * M[i * n + k] * dqq[k]
        qq[j] = qj
        ov[j] = 0.5 * (Tp - Tm) / (2.0 * eps)
    return out


def world_step(chain_args_1, chain_args_2, q1, dq1, q2, dq2, tau1, tau2,
               box_state, double box_mass, half_extents, double box_izz,
               double plane_h, cparams, pparams, gravity, double h, int n_sub):
    cdef _ChainView cv1 = _ChainView(chain_args_1)
    cdef _ChainView cv2 = _ChainView(chain_args_2)
    cdef cnp.ndarray[double, ndim=1] q1a = np.ascontiguousarray(q1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dq1a = np.ascontiguousarray(dq1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] q2a = np.ascontiguousarray(q2, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] dq2a = np.ascontiguousarray(dq2, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] t1a = np.ascontiguousarray(tau1, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] t2a = np.ascontiguousarray(tau2, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] bs = np.ascontiguousarray(box_state, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] he = np.ascontiguousarray(half_extents, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] cp = np.ascontiguousarray(cparams, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] pp = np.ascontiguousarray(pparams, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] g = np.ascontiguousarray(gravity, dtype=np.float64)

    if n_sub < 1:
        raise ValueError("n_sub must be >= 1")
    # state arrays are mutated in place; a silent copy would drop the update
    for given, arr in ((q1, q1a), (dq1, dq1a), (q2, q2a), (dq2, dq2a), (box_state, bs)):
        if given is not arr:
            raise ValueError("state arrays must be contiguous float64")

    pad_wrench = np.zeros((2, 6))
    pad_delta = np.zeros(2)
    pad_fn = np.zeros(2)
    pad_ft = np.zeros(2)
    pad_flag_arr = np.zeros(2, dtype=bool)
    box_force_arr = np.zeros(3)
    first_contact = np.full(2, -1, dtype=np.int64)

    cdef double[:, ::1] pw = pad_wrench
    cdef double[::1] pdel = pad_delta
    cdef double[::1] pfn = pad_fn
    cdef double[::1] pft = pad_ft
    cdef cnp.int64_t[::1] fc = first_contact

    cdef Chain* chains[2]
    chains[0] = &cv1.c
    chains[1] = &cv2.c
    cdef double* qs[2]
    cdef double* dqs[2]
    cdef double* taus[2]
    qs[0] = &q1a[0]; qs[1] = &q2a[0]
    dqs[0] = &dq1a[0]; dqs[1] = &dq2a[0]
    taus[0] = &t1a[0]; taus[1] = &t2a[0]

    cdef int step, i, j, k, n, flag
    cdef int flags[2]
    cdef double p_e[3]
    cdef double R_e[9]
    cdef double J[6 * MAXN]
    cdef double v6[6]
    cdef double djdq[6]
    cdef double delta, fn, ft, ddot_sp, spd, gap_p, fnp, wz
    cdef double force[3]
    cdef double p_c[3]
    cdef double wrench[2][6]
    cdef double box_force[3]
    cdef double box_tau_z
    cdef double rel[3]
    cdef double t_1[3]
    cdef double qdd[MAXN]
    cdef double M[MAXN * MAXN]
    cdef double L[MAXN * MAXN]
    cdef double hh[MAXN]
    cdef double rhs[MAXN]
    cdef double zero[MAXN]
    cdef double k_p = pp[0], c_p = pp[1], mu_p = pp[2], r_eff = pp[3], eps_p = pp[4]
    cdef int fail = 0

    for j in range(MAXN):
        zero[j] = 0.0

    with nogil:
        for step in range(n_sub):
            box_tau_z = 0.0
            box_force[0] = box_force[1] = box_force[2] = 0.0
            for i in range(2):
                for k in range(6):
                    wrench[i][k] = 0.0
                flags[i] = 0

            for i in range(2):
                n = chains[i].n
                c_ee_state(chains[i], qs[i], dqs[i], p_e, R_e, J, v6, djdq)
                c_pad_contact(p_e, v6, &bs[0], &he[0], &cp[0],
                              &delta, &fn, &ft, &flag, force, p_c)
                if step == n_sub - 1:
                    pdel[i] = delta
                    pfn[i] = fn
                    pft[i] = ft
                flags[i] = flag
                if flag and fc[i] < 0:
                    fc[i] = step
                if flag:
                    wrench[i][0] = force[0]
                    wrench[i][1] = force[1]
                    wrench[i][2] = force[2]
                    rel[0] = p_c[0] - p_e[0]
                    rel[1] = p_c[1] - p_e[1]
                    rel[2] = p_c[2] - p_e[2]
                    v_cross(rel, force, t_1)
                    wrench[i][3] = t_1[0]
                    wrench[i][4] = t_1[1]
                    wrench[i][5] = t_1[2]
                    box_force[0] -= force[0]
                    box_force[1] -= force[1]
                    box_force[2] -= force[2]
                    rel[0] = p_c[0] - bs[0]
                    rel[1] = p_c[1] - bs[1]
                    box_tau_z -= rel[0] * force[1] - rel[1] * force[0]

                # arm dynamics under the pad reaction
                c_crba(chains[i], qs[i], M)
                c_rnea(chains[i], qs[i], dqs[i], zero, &g[0], hh)
                for j in range(n):
                    rhs[j] = taus[i][j] - hh[j]
                    for k in range(6):
                        rhs[j] += J[k * n + j] * wrench[i][k]
                if c_cholesky(n, M, L):
                    fail = 1
                    break
                c_chol_solve(n, L, rhs, qdd)
                for j in range(n):
                    dqs[i][j] += h * qdd[j]
                    qs[i][j] += h * dqs[i][j]

            if fail:
                break

            # support plane on the box
            gap_p = plane_h - (bs[2] - he[2])
            if gap_p > 0.0:
                fnp = k_p * gap_p + c_p * (-bs[6])
                if fnp > 0.0:
                    box_force[2] += fnp
                    spd = sqrt(bs[4] * bs[4] + bs[5] * bs[5])
                    if spd > 1e-12:
                        box_force[0] -= mu_p * fnp * tanh(spd / eps_p) * (bs[4] / spd)
                        box_force[1] -= mu_p * fnp * tanh(spd / eps_p) * (bs[5] / spd)
                    wz = bs[7]
                    box_tau_z += -mu_p * fnp * r_eff * tanh(wz * r_eff / eps_p)
            box_force[0] += box_mass * g[0]
            box_force[1] += box_mass * g[1]
            box_force[2] += box_mass * g[2]

            bs[4] += h * (box_force[0] / box_mass)
            bs[5] += h * (box_force[1] / box_mass)
            bs[6] += h * (box_force[2] / box_mass)
            bs[7] += h * (box_tau_z / box_izz)
            bs[0] += h * bs[4]
            bs[1] += h * bs[5]
            bs[2] += h * bs[6]
            bs[3] += h * bs[7]

            if step == n_sub - 1:
                for i in range(2):
                    for k in range(6):
                        pw[i, k] = wrench[i][k]

    if fail:
        raise np.linalg.LinAlgError("mass matrix not positive definite during world step")

    pad_flag_arr[0] = bool(flags[0])
    pad_flag_arr[1] = bool(flags[1])
    box_force_arr[:] = [box_force[0], box_force[1], box_force[2]]
    return {
        "pad_wrench": pad_wrench,
        "pad_delta": pad_delta,
        "pad_fn": pad_fn,
        "pad_ft": pad_ft,
        "pad_flag": pad_flag_arr,
        "box_force": box_force_arr,
        "box_tau_z": box_tau_z,
        "first_contact": first_contact,
    }
