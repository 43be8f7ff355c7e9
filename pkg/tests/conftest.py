import numpy as np
import pytest

from rsqp.model import ChainModel


def make_pendulum(mass=1.3, length=0.7, axis_inertia=0.02):
    """Single revolute joint about world -y: q = 0 horizontal (+x), positive q up."""
    return ChainModel(
        name="pendulum",
        axis=np.array([[0.0, -1.0, 0.0]]),
        origin_p=np.zeros((1, 3)),
        origin_R=np.eye(3)[None, :, :],
        mass=np.array([mass]),
        com=np.array([[length, 0.0, 0.0]]),
        inertia=np.diag([0.01, axis_inertia, 0.015])[None, :, :],
        ee_p=np.array([length, 0.0, 0.0]),
        ee_R=np.eye(3),
        base_p=np.zeros(3),
        base_R=np.eye(3),
        q_min=np.array([-10.0]),
        q_max=np.array([10.0]),
        dq_max=np.array([50.0]),
        tau_max=np.array([500.0]),
    )


def make_planar2(l1=0.8, l2=0.6, m1=1.1, m2=0.7):
    """Two z-axis joints in the x-y plane."""
    return ChainModel(
        name="planar2",
        axis=np.array([[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]),
        origin_p=np.array([[0.0, 0.0, 0.0], [l1, 0.0, 0.0]]),
        origin_R=np.tile(np.eye(3), (2, 1, 1)),
        mass=np.array([m1, m2]),
        com=np.array([[l1 / 2, 0.0, 0.0], [l2 / 2, 0.0, 0.0]]),
        inertia=np.array([np.diag([1e-3, 1e-3, m1 * l1**2 / 12]),
                          np.diag([1e-3, 1e-3, m2 * l2**2 / 12])]),
        ee_p=np.array([l2, 0.0, 0.0]),
        ee_R=np.eye(3),
        base_p=np.zeros(3),
        base_R=np.eye(3),
        q_min=np.full(2, -10.0),
        q_max=np.full(2, 10.0),
        dq_max=np.full(2, 50.0),
        tau_max=np.full(2, 500.0),
    )


def make_arm(n=7, seed=11, base_p=(0.0, 0.0, 0.0), base_R=np.eye(3)):
    """Physically plausible n-DOF chain with alternating z/y axes."""
    rng = np.random.default_rng(seed)
    axes = np.array([[0.0, 0.0, 1.0] if j % 2 == 0 else [0.0, 1.0, 0.0]
                     for j in range(n)])
    lengths = rng.uniform(0.12, 0.3, size=n)
    origin_p = np.zeros((n, 3))
    origin_p[0] = [0, 0, 0.2]
    for j in range(1, n):
        origin_p[j] = [0, 0, lengths[j - 1]]
    masses = rng.uniform(0.8, 4.0, size=n)
    com = np.zeros((n, 3))
    inertia = np.zeros((n, 3, 3))
    for j in range(n):
        nxt = lengths[j]
        com[j] = [0, 0, nxt / 2]
        rod = masses[j] * nxt**2 / 12.0 + 1e-3
        inertia[j] = np.diag([rod, rod, 2e-3])
    return ChainModel(
        name=f"arm{n}",
        axis=axes,
        origin_p=origin_p,
        origin_R=np.tile(np.eye(3), (n, 1, 1)),
        mass=masses,
        com=com,
        inertia=inertia,
        ee_p=np.array([0.0, 0.0, 0.1]),
        ee_R=np.eye(3),
        base_p=np.asarray(base_p, dtype=float),
        base_R=np.asarray(base_R, dtype=float),
        q_min=np.full(n, -3.0),
        q_max=np.full(n, 3.0),
        dq_max=np.full(n, 3.0),
        tau_max=np.concatenate([np.full(min(n, 4), 87.0), np.full(max(n - 4, 0), 20.0)]),
    )


@pytest.fixture
def pendulum():
    return make_pendulum()


@pytest.fixture
def planar2():
    return make_planar2()


@pytest.fixture
def arm7():
    return make_arm(7)


@pytest.fixture
def arm6():
    return make_arm(6, seed=23)
