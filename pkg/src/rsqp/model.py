"""Plant description: serial chains, box, contact parameters, YAML I/O.

The plant file is the single source of truth for the simulated setup:
two arm chains, gravity, base poses, the box, and contact constants.
It is versioned (``schema: rsqp-plant/1``) so old runs stay decodable.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass, field

import numpy as np
import yaml

from .liegroup import rot_z, rotation_valid

PLANT_SCHEMA = "rsqp-plant/1"


class PlantFileError(ValueError):
    """Malformed or wrong-version plant description file."""


class OutOfRange(ValueError):
    """Requested value outside the supported range."""


@dataclass(frozen=True)
class ChainModel:
    """Serial chain of revolute joints, world-anchored at ``base_p``/``base_R``.

    Joint j's frame sits at ``origin_p[j]``/``origin_R[j]`` in its parent
    frame and rotates about ``axis[j]`` (unit, own frame). Link j's inertial
    data (``mass``, ``com``, ``inertia`` about the COM) is expressed in
    joint j's frame. The end-effector frame hangs off the last joint.
    """

    name: str
    axis: np.ndarray        # (n, 3)
    origin_p: np.ndarray    # (n, 3)
    origin_R: np.ndarray    # (n, 3, 3)
    mass: np.ndarray        # (n,)
    com: np.ndarray         # (n, 3)
    inertia: np.ndarray     # (n, 3, 3)
    ee_p: np.ndarray        # (3,)
    ee_R: np.ndarray        # (3, 3)
    base_p: np.ndarray      # (3,)
    base_R: np.ndarray      # (3, 3)
    q_min: np.ndarray       # (n,)
    q_max: np.ndarray       # (n,)
    dq_max: np.ndarray      # (n,) symmetric velocity bound
    tau_max: np.ndarray     # (n,) symmetric torque bound

    def __post_init__(self):
        n = self.axis.shape[0]
        if n < 1:
            raise ValueError("chain needs at least one joint")
        for name in ("axis", "origin_p", "origin_R", "mass", "com", "inertia",
                     "ee_p", "ee_R", "base_p", "base_R", "q_min", "q_max",
                     "dq_max", "tau_max"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64))
            object.__setattr__(self, name, arr)
        if np.any(self.mass <= 0):
            raise ValueError("link masses must be positive")
        if np.any(self.q_min >= self.q_max):
            raise ValueError("q_min must be < q_max elementwise")
        for j in range(n):
            I = self.inertia[j]
            if np.linalg.norm(I - I.T) > 1e-12 or np.linalg.eigvalsh(I)[0] < -1e-12:
                raise ValueError(f"link {j} inertia must be symmetric PSD")
        object.__setattr__(
            self, "axis",
            np.ascontiguousarray(self.axis / np.linalg.norm(self.axis, axis=1, keepdims=True)),
        )
        if not rotation_valid(self.base_R, tol=1e-8) or not rotation_valid(self.ee_R, tol=1e-8):
            raise ValueError("base_R and ee_R must be valid rotations")

    @property
    def n(self) -> int:
        return self.axis.shape[0]

    def kernel_args(self) -> tuple:
        """Flat array tuple consumed by the compute kernels."""
        return (self.axis, self.origin_p, self.origin_R, self.mass, self.com,
                self.inertia, self.ee_p, self.ee_R, self.base_p, self.base_R)


@dataclass
class RobotState:
    q: np.ndarray
    dq: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64).copy()
        self.dq = np.asarray(self.dq, dtype=np.float64).copy()
        if self.q.shape != self.dq.shape:
            raise ValueError("q and dq must have the same shape")

    def copy(self) -> "RobotState":
        return RobotState(self.q, self.dq)


@dataclass
class BoxBody:
    """Rigid box, translation + yaw by default, resting on a support plane."""

    mass: float
    half_extents: np.ndarray     # (3,)
    p: np.ndarray                # (3,) COM position, world
    yaw: float = 0.0
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    wz: float = 0.0
    plane_height: float = 0.0

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("box mass must be positive")
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64).copy()
        self.p = np.asarray(self.p, dtype=np.float64).copy()
        self.v = np.asarray(self.v, dtype=np.float64).copy()

    @property
    def R(self) -> np.ndarray:
        return rot_z(self.yaw)

    @property
    def inertia_zz(self) -> float:
        hx, hy, _ = self.half_extents
        return self.mass / 3.0 * (hx * hx + hy * hy)

    def copy(self) -> "BoxBody":
        return BoxBody(self.mass, self.half_extents, self.p, self.yaw, self.v,
                       self.wz, self.plane_height)

    def state_array(self) -> np.ndarray:
        """[px, py, pz, yaw, vx, vy, vz, wz] kernel layout."""
        return np.array([*self.p, self.yaw, *self.v, self.wz], dtype=np.float64)

    def set_state_array(self, s: np.ndarray) -> None:
        self.p = s[0:3].copy()
        self.yaw = float(s[3])
        self.v = s[4:7].copy()
        self.wz = float(s[7])


def displace_box(box: BoxBody, dy: float) -> BoxBody:
    """Box shifted along world y; the environment-uncertainty knob."""
    if abs(dy) > 0.05:
        raise OutOfRange(f"|dy| = {abs(dy):.3f} m exceeds the 0.05 m displacement range")
    out = box.copy()
    out.p = out.p + np.array([0.0, dy, 0.0])
    return out


@dataclass(frozen=True)
class ContactParams:
    """Compliant pad-face contact constants (Kelvin-Voigt + regularized Coulomb)."""

    pad_radius: float = 0.03
    stiffness: float = 1.0e4       # N/m
    damping: float = 200.0         # N s/m
    friction: float = 0.8
    eps_v: float = 0.01            # m/s tangential regularization

    def __post_init__(self):
        if min(self.pad_radius, self.stiffness, self.damping, self.friction, self.eps_v) <= 0:
            raise ValueError("all contact parameters must be positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.pad_radius, self.stiffness, self.damping,
                         self.friction, self.eps_v], dtype=np.float64)


@dataclass(frozen=True)
class PlaneParams:
    """Support-plane compliance under the box."""

    stiffness: float = 5.0e4
    damping: float = 500.0
    friction: float = 0.8
    spin_radius: float = 0.06      # effective lever arm for yaw friction
    eps_v: float = 5.0e-3          # m/s; smaller than the pad value so the
                                   # box does not creep under sub-cone loads

    def as_array(self) -> np.ndarray:
        return np.array([self.stiffness, self.damping, self.friction,
                         self.spin_radius, self.eps_v], dtype=np.float64)


@dataclass
class PlantConfig:
    arms: list            # [ChainModel, ChainModel]
    q_home: np.ndarray    # (n,) shared by both arms (mirrored bases)
    box: BoxBody
    contact: ContactParams
    plane: PlaneParams
    gravity: np.ndarray   # (3,)

    def fresh_box(self) -> BoxBody:
        return self.box.copy()


def _chain_from_dict(d: dict, name: str) -> ChainModel:
    joints = d["joints"]
    n = len(joints)
    axis = np.array([j["axis"] for j in joints], dtype=float)
    origin_p = np.array([j["origin"] for j in joints], dtype=float)
    origin_R = np.tile(np.eye(3), (n, 1, 1))
    mass = np.array([j["mass"] for j in joints], dtype=float)
    com = np.array([j["com"] for j in joints], dtype=float)
    inertia = np.array([np.diag(j["inertia_diag"]) for j in joints], dtype=float)
    ee = d["end_effector"]
    base = d["base"]
    lim = d["limits"]
    return ChainModel(
        name=name,
        axis=axis,
        origin_p=origin_p,
        origin_R=origin_R,
        mass=mass,
        com=com,
        inertia=inertia,
        ee_p=np.array(ee["origin"], dtype=float),
        ee_R=np.asarray(ee.get("R", np.eye(3).tolist()), dtype=float),
        base_p=np.array(base["position"], dtype=float),
        base_R=rot_z(np.deg2rad(float(base.get("yaw_deg", 0.0)))),
        q_min=np.array(lim["q_min"], dtype=float),
        q_max=np.array(lim["q_max"], dtype=float),
        dq_max=np.array(lim["dq_max"], dtype=float),
        tau_max=np.array(lim["tau_max"], dtype=float),
    )


def load_plant(path_or_text) -> PlantConfig:
    """Parse a plant YAML file (path, file object, or text)."""
    if hasattr(path_or_text, "read"):
        raw = path_or_text.read()
    else:
        raw = str(path_or_text)
        if "\n" not in raw:
            with open(raw, "r", encoding="utf-8") as fh:
                raw = fh.read()
    try:
        doc = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise PlantFileError(f"plant file is not valid YAML: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("schema") != PLANT_SCHEMA:
        raise PlantFileError(f"expected schema {PLANT_SCHEMA!r}, got {doc.get('schema')!r}")

    shared_chain = doc["chain"]
    arms = []
    for arm in doc["arms"]:
        d = dict(shared_chain)
        d["base"] = arm["base"]
        arms.append(_chain_from_dict(d, arm["name"]))

    b = doc["box"]
    box = BoxBody(
        mass=float(b["mass"]),
        half_extents=np.array(b["half_extents"], dtype=float),
        p=np.array(b["position"], dtype=float),
        yaw=float(b.get("yaw", 0.0)),
        plane_height=float(doc["plane"]["height"]),
    )
    c = doc["contact"]
    contact = ContactParams(
        pad_radius=float(c["pad_radius"]),
        stiffness=float(c["stiffness"]),
        damping=float(c["damping"]),
        friction=float(c["friction"]),
        eps_v=float(c["eps_v"]),
    )
    p = doc["plane"]
    plane = PlaneParams(
        stiffness=float(p["stiffness"]),
        damping=float(p["damping"]),
        friction=float(p["friction"]),
        spin_radius=float(p["spin_radius"]),
    )
    return PlantConfig(
        arms=arms,
        q_home=np.array(doc["q_home"], dtype=float),
        box=box,
        contact=contact,
        plane=plane,
        gravity=np.array(doc["gravity"], dtype=float),
    )


def default_plant() -> PlantConfig:
    """The packaged dual 7-DOF arm setup."""
    text = importlib.resources.files("rsqp.data").joinpath("plant_dual_arm.yaml").read_text()
    return load_plant(text)


def mirrored_targets(gap_y: float, height: float, half_y: float):
    """Start poses for both pads, facing the box faces across the y axis.

    Returns per-arm (p, R): arm 0 approaches from +y, arm 1 from -y, with
    pad z-axes pointing at the box.
    """
    from .liegroup import rot_x

    p0 = np.array([0.0, half_y + gap_y, height])
    p1 = np.array([0.0, -(half_y + gap_y), height])
    R0 = rot_x(np.pi / 2)    # EE z-axis -> -y (toward box from +y side)
    R1 = rot_x(-np.pi / 2)   # EE z-axis -> +y
    return [(p0, R0), (p1, R1)]
