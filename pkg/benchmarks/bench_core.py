"""Benchmark the compiled kernels against the pure-NumPy fallback.

Usage: python3 benchmarks/bench_core.py [--episodes]

The fused world step is the hot path: one call advances both arms and
the box through one control period (10 substeps).
"""

import argparse
import sys
import time

import numpy as np

from rsqp._kernels import pycore

try:
    from rsqp._kernels import _core
except ImportError:
    _core = None

from rsqp.model import default_plant


def time_fn(fn, min_time=0.5, max_iter=100000):
    fn()  # warm up
    n = 0
    t0 = time.perf_counter()
    while True:
        fn()
        n += 1
        dt = time.perf_counter() - t0
        if dt >= min_time or n >= max_iter:
            return dt / n


def main(argv=None):
    parser = argparse.ArgumentParser()
    parser.add_argument("--episodes", action="store_true",
                        help="also time a full autonomous episode per backend")
    args = parser.parse_args(argv)

    plant = default_plant()
    arm = plant.arms[0]
    ka = arm.kernel_args()
    rng = np.random.default_rng(0)
    q = plant.q_home.copy()
    dq = rng.normal(0, 0.5, arm.n)
    tau = rng.normal(0, 5, arm.n)
    g = plant.gravity
    box = plant.fresh_box()
    bs = box.state_array()
    cp = plant.contact.as_array()
    pp = plant.plane.as_array()

    backends = [("python", pycore)]
    if _core is not None:
        backends.append(("cython", _core))

    rows = []
    for name, mod in backends:
        state = [q.copy(), dq.copy(), q.copy(), dq.copy(), bs.copy()]
        cases = {
            "ee_state": lambda m=mod: m.ee_state(ka, q, dq),
            "mass_matrix": lambda m=mod: m.mass_matrix(ka, q),
            "rnea": lambda m=mod: m.rnea(ka, q, dq, dq, g),
            "fd": lambda m=mod: m.fd(ka, q, dq, tau, np.zeros(6), g),
            "world_step(10)": lambda m=mod, s=state: m.world_step(
                ka, ka, s[0], s[1], s[2], s[3], tau, tau, s[4], box.mass,
                box.half_extents, box.inertia_zz, box.plane_height, cp, pp,
                g, 1e-4, 10),
        }
        for case, fn in cases.items():
            rows.append((name, case, time_fn(fn) * 1e6))

    print(f"{'backend':8s} {'kernel':16s} {'us/call':>10s}")
    for name, case, us in rows:
        print(f"{name:8s} {case:16s} {us:10.2f}")
    if _core is not None:
        print("\nspeedups (python / cython):")
        py = {c: us for n, c, us in rows if n == "python"}
        cy = {c: us for n, c, us in rows if n == "cython"}
        for case in py:
            print(f"  {case:16s} {py[case] / cy[case]:8.1f}x")

    if args.episodes:
        import os
        import subprocess
        code = (
            "import time, numpy as np\n"
            "from rsqp.model import default_plant\n"
            "from rsqp.harness import ScriptedOperator, run_demonstration, "
            "reference_from_recording, run_episode\n"
            "from rsqp.control import Variant\n"
            "from rsqp import backend_name\n"
            "plant = default_plant()\n"
            "rec = run_demonstration(plant, ScriptedOperator(), seed=0)\n"
            "ref = reference_from_recording(rec)\n"
            "t0 = time.perf_counter()\n"
            "run_episode(plant, ref, Variant.PROPOSED, -0.03, seed=0)\n"
            "print(f'{backend_name()}: episode in "
            "{time.perf_counter()-t0:.2f}s')\n"
        )
        for env_flag in ("0", "1"):
            env = dict(os.environ, RSQP_PURE_PYTHON=env_flag)
            if env_flag == "0":
                env.pop("RSQP_PURE_PYTHON")
            print(f"\nfull episode, RSQP_PURE_PYTHON={env_flag}:")
            subprocess.run([sys.executable, "-c", code], env=env, check=False)
    return 0


if __name__ == "__main__":
    sys.exit(main())
