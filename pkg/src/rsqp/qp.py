"""Dense strictly-convex QP solver for the per-step control optimization.

    minimize   0.5 x^T H x + g^T x
    subject to lb <= A x <= ub

Solved with a dual active-set method (Goldfarb-Idnani family): start at
the unconstrained minimum, add the most violated constraint, take dual
line-search steps, drop constraints whose multiplier hits zero. Always
dual feasible, so no phase-1 is needed and infeasibility shows up as an
unbounded dual step. A warm-start fast path first tries the previous
active set as an equality solve and accepts it if it is KKT-optimal,
which is the common case at 1 kHz where the active set rarely changes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve


class Infeasible(RuntimeError):
    """No point satisfies the constraints within tolerance."""


class MaxIterations(RuntimeError):
    """Active-set iteration limit exceeded."""


class DimensionMismatch(ValueError):
    """Task or constraint blocks disagree with the variable dimension."""


@dataclass
class QpProblem:
    H: np.ndarray             # (m, m) symmetric PD
    g: np.ndarray             # (m,)
    A: np.ndarray             # (k, m); k may be 0
    lb: np.ndarray            # (k,)
    ub: np.ndarray            # (k,)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.g = np.asarray(self.g, dtype=float)
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.H.shape[0])
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        m = self.H.shape[0]
        if self.H.shape != (m, m) or self.g.shape != (m,):
            raise DimensionMismatch("H/g shape mismatch")
        if self.lb.shape != (self.A.shape[0],) or self.ub.shape != (self.A.shape[0],):
            raise DimensionMismatch("constraint bound shape mismatch")
        if np.linalg.norm(self.H - self.H.T) > 1e-10 * max(1.0, np.linalg.norm(self.H)):
            raise ValueError("H must be symmetric")
        np.linalg.cholesky(self.H)  # PD check
        if np.any(self.lb > self.ub + 1e-12):
            raise ValueError("lb must be <= ub")


@dataclass
class QpSolution:
    x: np.ndarray
    active_set: list                  # [(row, side)] with side +1 upper, -1 lower
    kkt_residual: float
    iterations: int
    duals: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _kkt_residual(p: QpProblem, x, active, duals):
    grad = p.H @ x + p.g
    for (row, side), lam in zip(active, duals):
        # lagrangian: side * lam * (a x - bound); lam >= 0
        grad += side * lam * p.A[row]
    stat = np.linalg.norm(grad, ord=np.inf)
    if p.A.shape[0]:
        Ax = p.A @ x
        viol = np.maximum(0.0, np.maximum(p.lb - Ax, Ax - p.ub))
        feas = viol.max() if viol.size else 0.0
    else:
        feas = 0.0
    comp = 0.0
    for (row, side), lam in zip(active, duals):
        bound = p.ub[row] if side > 0 else p.lb[row]
        comp = max(comp, abs(lam * (p.A[row] @ x - bound)))
    return max(stat, feas, comp)


def _solve_eqp(cho, p: QpProblem, active):
    """Minimize subject to the active rows held as equalities.

    Returns (x, duals) where duals follow the sign convention of
    :func:`_kkt_residual` (nonnegative at optimality).
    """
    x_free = cho_solve(cho, -p.g)
    if not active:
        return x_free, np.zeros(0)
    N = np.stack([p.A[row] for row, _ in active])            # (na, m)
    b = np.array([p.ub[row] if side > 0 else p.lb[row] for row, side in active])
    HiNT = cho_solve(cho, N.T)                               # H^-1 N^T
    S = N @ HiNT                                             # (na, na)
    mult = np.linalg.solve(S, b - N @ x_free)
    x = x_free + HiNT @ mult
    sides = np.array([side for _, side in active], dtype=float)
    duals = -sides * mult
    return x, duals


def solve(p: QpProblem, warm_start=None, max_iter: int = 200,
          tol: float = 1e-9) -> QpSolution:
    """Solve the QP; optionally warm-started from a previous active set."""
    m = p.H.shape[0]
    k = p.A.shape[0]
    cho = cho_factor(0.5 * (p.H + p.H.T))
    iters = 0

    if warm_start:
        ws = [(r, s) for (r, s) in warm_start if 0 <= r < k]
        try:
            x, duals = _solve_eqp(cho, p, ws)
            iters += 1
            if (not ws or duals.min() >= -tol) and _kkt_residual(p, x, ws, np.maximum(duals, 0.0)) < 1e-7:
                return QpSolution(x=x, active_set=list(ws),
                                  kkt_residual=_kkt_residual(p, x, ws, np.maximum(duals, 0.0)),
                                  iterations=iters, duals=np.maximum(duals, 0.0))
        except np.linalg.LinAlgError:
            pass

    # cold start at the unconstrained minimum (dual feasible by construction)
    x = cho_solve(cho, -p.g)
    active: list = []
    duals = np.zeros(0)

    while True:
        iters += 1
        if iters > max_iter:
            raise MaxIterations(f"active set did not settle in {max_iter} iterations")

        if k:
            Ax = p.A @ x
            up_viol = Ax - p.ub
            lo_viol = p.lb - Ax
            viol = np.maximum(up_viol, lo_viol)
            viol[[r for r, _ in active]] = -np.inf
            worst = int(np.argmax(viol))
            worst_v = viol[worst]
        else:
            worst_v = -np.inf
        if worst_v <= tol:
            res = _kkt_residual(p, x, active, duals)
            return QpSolution(x=x, active_set=active, kkt_residual=res,
                              iterations=iters, duals=duals)

        side = 1 if up_viol[worst] >= lo_viol[worst] else -1
        nplus = side * p.A[worst]
        bplus = side * (p.ub[worst] if side > 0 else p.lb[worst])
        # incoming constraint in <= form: nplus . x <= bplus, currently violated
        u_plus = 0.0

        while True:
            # step direction that approaches nplus while keeping active rows tight
            if active:
                N = np.stack([s * p.A[r] for r, s in active])
                HiNT = cho_solve(cho, N.T)
                S = N @ HiNT
                Hin = cho_solve(cho, nplus)
                r_dual = np.linalg.solve(S, N @ Hin)
                z = Hin - HiNT @ r_dual
            else:
                z = cho_solve(cho, nplus)
                r_dual = np.zeros(0)

            znorm = float(nplus @ z)             # = z^T H z >= 0
            s_viol = float(nplus @ x - bplus)    # > 0 while violated

            # dual blocking step: first active multiplier driven to zero
            t1 = np.inf
            blocker = -1
            for idx, rd in enumerate(r_dual):
                if rd > 1e-12 and duals[idx] / rd < t1:
                    t1 = duals[idx] / rd
                    blocker = idx
            t2 = s_viol / znorm if znorm > 1e-14 else np.inf

            if not np.isfinite(t1) and not np.isfinite(t2):
                raise Infeasible("constraints are inconsistent")

            if t2 <= t1:
                # full step: nplus becomes active with its accumulated dual
                x = x - t2 * z
                if len(duals):
                    duals = duals - t2 * r_dual
                active = active + [(worst, side)]
                duals = np.append(duals, u_plus + t2)
                break

            # partial step: blocker leaves the active set, duals keep moving
            if znorm > 1e-14:
                x = x - t1 * z
            duals = duals - t1 * r_dual
            u_plus += t1
            active = active[:blocker] + active[blocker + 1:]
            duals = np.delete(duals, blocker)
            iters += 1
            if iters > max_iter:
                raise MaxIterations(f"active set did not settle in {max_iter} iterations")


def build_control_qp(tasks, constraints, reg: float = 1e-8) -> QpProblem:
    """Stack weighted least-squares tasks and box-type constraint rows.

    ``tasks``: iterable of (J_t, b_t, w) realizing w * ||J_t x - b_t||^2.
    ``constraints``: iterable of (A_c, lb_c, ub_c) row blocks.
    Tikhonov regularization keeps H strictly convex through transient
    rank loss.
    """
    tasks = list(tasks)
    if not tasks:
        raise DimensionMismatch("at least one task is required")
    m = np.asarray(tasks[0][0]).shape[-1]
    H = reg * np.eye(m)
    g = np.zeros(m)
    for Jt, bt, w in tasks:
        Jt = np.asarray(Jt, dtype=float).reshape(-1, m)
        bt = np.asarray(bt, dtype=float).reshape(-1)
        if bt.shape[0] != Jt.shape[0]:
            raise DimensionMismatch("task rows and targets disagree")
        H += w * Jt.T @ Jt
        g -= w * Jt.T @ bt
    blocks = []
    lbs = []
    ubs = []
    for Ac, lb, ub in constraints:
        Ac = np.asarray(Ac, dtype=float).reshape(-1, m)
        lbs.append(np.asarray(lb, dtype=float).reshape(-1))
        ubs.append(np.asarray(ub, dtype=float).reshape(-1))
        if lbs[-1].shape[0] != Ac.shape[0] or ubs[-1].shape[0] != Ac.shape[0]:
            raise DimensionMismatch("constraint rows and bounds disagree")
        blocks.append(Ac)
    A = np.vstack(blocks) if blocks else np.zeros((0, m))
    lb = np.concatenate(lbs) if lbs else np.zeros(0)
    ub = np.concatenate(ubs) if ubs else np.zeros(0)
    return QpProblem(H=0.5 * (H + H.T), g=g, A=A, lb=lb, ub=ub)
