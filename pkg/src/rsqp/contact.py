"""Compliant pad-box contact and box rigid-body stepping.

Penalty contact (Kelvin-Voigt normal force, tanh-regularized Coulomb
friction) instead of impulsive impact maps: the silicone pads make real
impacts finite-duration events, and that finite transition is exactly
the regime the interim control mode exists for.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import pycore
from .model import BoxBody, ContactParams, PlaneParams


@dataclass
class PadContact:
    penetration: float
    normal_force: float
    tangential_force: float
    in_contact: bool
    wrench_on_arm: np.ndarray   # (6,) at the EE origin, world-aligned
    point: np.ndarray           # (3,) contact point, world


@dataclass
class ContactSnapshot:
    pads: list                    # [PadContact, PadContact]
    force_on_box: np.ndarray      # (3,) sum of pad reactions, world
    yaw_torque_on_box: float

    @property
    def flags(self) -> np.ndarray:
        return np.array([p.in_contact for p in self.pads])


def contact_wrenches(pads, box: BoxBody, params: ContactParams) -> ContactSnapshot:
    """Pad-box contact forces for both pads.

    ``pads`` is a list of (pose_p, twist6) per arm; the pad sphere center
    sits at the EE origin. Newton's third law holds by construction: the
    box receives the negated pad forces applied at the contact points.
    """
    box_state = box.state_array()
    cp = params.as_array()
    out = []
    force_on_box = np.zeros(3)
    yaw_torque = 0.0
    for p_pad, v_pad in pads:
        delta, fn, ft, flag, force, p_c = pycore.pad_contact(
            np.asarray(p_pad, float), np.asarray(v_pad, float),
            box_state, box.half_extents, cp)
        wrench = np.zeros(6)
        if flag:
            wrench[:3] = force
            wrench[3:] = np.cross(p_c - np.asarray(p_pad, float), force)
            force_on_box -= force
            yaw_torque -= float(np.cross(p_c - box.p, force)[2])
        out.append(PadContact(penetration=delta, normal_force=fn,
                              tangential_force=ft, in_contact=flag,
                              wrench_on_arm=wrench, point=p_c))
    return ContactSnapshot(pads=out, force_on_box=force_on_box,
                           yaw_torque_on_box=yaw_torque)


def step_box(box: BoxBody, force: np.ndarray, yaw_torque: float,
             plane: PlaneParams, gravity, h_step: float) -> BoxBody:
    """Semi-implicit Euler on the box under an applied force/yaw torque.

    The support plane adds its own compliant normal force plus sliding
    and spin friction; gravity is included here.
    """
    if h_step <= 0:
        raise ValueError("h_step must be positive")
    s = box.state_array()
    pf, ptz = pycore.plane_wrench(s, box.mass, box.half_extents,
                                  box.plane_height, plane.as_array(),
                                  gravity[2])
    f_tot = np.asarray(force, float) + pf + box.mass * np.asarray(gravity, float)
    t_tot = float(yaw_torque) + ptz
    out = box.copy()
    out.v = box.v + h_step * f_tot / box.mass
    out.wz = box.wz + h_step * t_tot / box.inertia_zz
    out.p = box.p + h_step * out.v
    out.yaw = box.yaw + h_step * out.wz
    return out
