"""Independent reference solvers used only as test oracles.

These deliberately share no code path with the implementations they
check: the QP oracle is an accelerated projected-gradient ascent on the
dual, which only needs a Cholesky solve and clipping at zero.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve


def solve_qp_projected_gradient(H, g, A, lb, ub, iters=60000, tol=1e-12):
    """min 0.5 x'Hx + g'x s.t. lb <= Ax <= ub via FISTA on the split dual.

    With multipliers (lp, lm) >= 0 for Ax <= ub and lb <= Ax, the primal
    recovery is x = -H^-1 (g + A'(lp - lm)); projection is a clip at 0.
    """
    H = np.asarray(H, float)
    g = np.asarray(g, float)
    A = np.asarray(A, float).reshape(-1, H.shape[0])
    k = A.shape[0]
    cho = cho_factor(H)
    if k == 0:
        return cho_solve(cho, -g)
    HiAT = cho_solve(cho, A.T)
    M = A @ HiAT
    L = max(np.linalg.eigvalsh(M).max() * 2.0, 1e-12)
    step = 1.0 / L

    lam = np.zeros(2 * k)      # [lp, lm]
    y = lam.copy()
    t_acc = 1.0
    for it in range(iters):
        mu = y[:k] - y[k:]
        x = cho_solve(cho, -(g + A.T @ mu))
        Ax = A @ x
        grad = np.concatenate([Ax - ub, lb - Ax])   # ascent directions
        lam_next = np.maximum(0.0, y + step * grad)
        if np.dot(y - lam_next, lam_next - lam) > 0.0:
            t_acc = 1.0        # adaptive restart keeps momentum honest
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        y = lam_next + (t_acc - 1.0) / t_next * (lam_next - lam)
        if it % 50 == 49 and np.linalg.norm(lam_next - lam, ord=np.inf) < tol:
            lam = lam_next
            break
        lam, t_acc = lam_next, t_next
    mu = lam[:k] - lam[k:]
    return cho_solve(cho, -(g + A.T @ mu))


def random_feasible_qp(rng, m=14, k=42, spread=1.0):
    """Random strictly convex QP with a guaranteed interior point."""
    B = rng.normal(size=(m, m))
    H = B @ B.T + 0.5 * np.eye(m)
    g = rng.normal(size=m) * spread
    A = rng.normal(size=(k, m))
    x0 = rng.normal(size=m)
    Ax0 = A @ x0
    lo_off = rng.uniform(0.05, 1.5, size=k)
    hi_off = rng.uniform(0.05, 1.5, size=k)
    return H, g, A, Ax0 - lo_off, Ax0 + hi_off
