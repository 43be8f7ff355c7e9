"""Simulated world: two arms and the box, advanced by the fused kernel."""

from __future__ import annotations

import numpy as np

from ._kernels import impl
from .model import BoxBody, PlantConfig, RobotState


class SimDiverged(RuntimeError):
    """Simulation state became non-finite or unphysically large."""


class ContactWorld:
    """Owns the mutable simulation state and steps it at the substep rate.

    The control loop runs at ``dt``; each control period is integrated as
    ``n_sub`` substeps of ``h_sub`` with zero-order-held torques (stiff
    contact needs finer integration than the control rate).
    """

    def __init__(self, plant: PlantConfig, q0=None, box: BoxBody | None = None,
                 dt: float = 1e-3, h_sub: float = 1e-4):
        self.plant = plant
        self.arms = plant.arms
        self.dt = dt
        self.h_sub = h_sub
        self.n_sub = int(round(dt / h_sub))
        if abs(self.n_sub * h_sub - dt) > 1e-12:
            raise ValueError("dt must be an integer multiple of h_sub")
        q0 = plant.q_home if q0 is None else np.asarray(q0, float)
        self.q = [np.ascontiguousarray(q0, dtype=np.float64).copy() for _ in range(2)]
        self.dq = [np.zeros(self.arms[i].n) for i in range(2)]
        self.box = (box or plant.fresh_box())
        self._box_state = np.ascontiguousarray(self.box.state_array())
        self.time = 0.0
        self.first_contact_time = [None, None]
        self._args = [arm.kernel_args() for arm in self.arms]

    def state(self, i: int) -> RobotState:
        return RobotState(self.q[i], self.dq[i])

    def box_body(self) -> BoxBody:
        self.box.set_state_array(self._box_state)
        return self.box

    def step(self, tau0: np.ndarray, tau1: np.ndarray) -> dict:
        """One control period under held torques; returns the final-substep
        contact snapshot."""
        plant = self.plant
        box = self.box
        snap = impl.world_step(
            self._args[0], self._args[1],
            self.q[0], self.dq[0], self.q[1], self.dq[1],
            np.ascontiguousarray(tau0, dtype=np.float64),
            np.ascontiguousarray(tau1, dtype=np.float64),
            self._box_state, box.mass, box.half_extents, box.inertia_zz,
            box.plane_height, plant.contact.as_array(), plant.plane.as_array(),
            plant.gravity, self.h_sub, self.n_sub)
        for i in range(2):
            fc = int(snap["first_contact"][i])
            if fc >= 0 and self.first_contact_time[i] is None:
                self.first_contact_time[i] = self.time + (fc + 1) * self.h_sub
        self.time += self.dt
        self._check_finite()
        return snap

    def _check_finite(self):
        for i in range(2):
            if not np.all(np.isfinite(self.q[i])) or np.abs(self.dq[i]).max() > 1e3:
                raise SimDiverged(f"arm {i} state diverged at t={self.time:.3f}s")
        if not np.all(np.isfinite(self._box_state)):
            raise SimDiverged(f"box state diverged at t={self.time:.3f}s")
