"""Scripted operator, episode runners, sweep experiment, metrics, plots.

The scripted operator replays the role of the human teleoperator: drive
both pads into the box at speed, ease back to a clamp force, hold, lift.
Everything downstream (recording, extension, autonomous tracking) is
agnostic to whether the demonstration came from here or from a human at
the browser.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import backend_name
from .control import OperatorCommand, Variant
from .detection import DetectorParams
from .dynamics import ee_kinematics
from .model import PlantConfig, RobotState
from .reference import (ExtendedReference, Recording, RsParams, extend,
                        extract_nominal_impact_time, NoImpactFound)
from .session import EpisodeLog, SessionConfig, SimSession

SWEEP_DISPLACEMENTS = (-0.030, -0.015, 0.0, 0.015, 0.030)


class DemonstrationFailed(RuntimeError):
    pass


class WindowNotCovered(ValueError):
    pass


def _smoothstep(a: float) -> float:
    a = min(max(a, 0.0), 1.0)
    return a * a * (3.0 - 2.0 * a)


def _smoothstep_rate(a: float, duration: float) -> float:
    if a <= 0.0 or a >= 1.0:
        return 0.0
    return 6.0 * a * (1.0 - a) / duration


@dataclass
class ScriptedOperator:
    """Mirrored two-arm demonstration profile.

    A slow creep phase precedes the strike so the detector's velocity
    lookback (0.2 s) always sees approach motion; the strike then carries
    the pads through first contact at full speed (a genuine impact)
    before easing the target back out to the commanded clamp depth.
    """

    approach_speed: float = 0.9    # m/s during the strike
    creep_speed: float = 0.15      # m/s pre-approach
    creep_dist: float = 0.03       # m covered while creeping
    ramp_time: float = 0.12        # s smooth creep-to-strike speed blend
    clamp_force: float = 15.0      # N steady clamp per pad
    lift_height: float = 0.1       # m
    settle_time: float = 0.6
    overshoot: float = 0.06        # m of target travel past first contact
    ease_time: float = 0.4
    hold_time: float = 1.0
    lift_time: float = 0.8
    tail_time: float = 0.6

    def __post_init__(self):
        if self.approach_speed <= 0 or self.creep_speed <= 0:
            raise DemonstrationFailed("approach speeds must be positive")

    def attach(self, plant: PlantConfig, rs: RsParams):
        """Resolve the geometry-dependent waypoints from the plant."""
        self._poses = []
        for i, arm in enumerate(plant.arms):
            kin = ee_kinematics(arm, RobotState(plant.q_home, np.zeros(arm.n)))
            self._poses.append((kin.p.copy(), kin.R.copy()))
        half_y = plant.box.half_extents[1]
        pad = plant.contact.pad_radius
        k_c = plant.contact.stiffness
        K_y = rs.K_r[1]
        self._xi = float(plant.q_home[rs.posture_joint])
        self._y_contact = half_y + pad
        self._y_deep = self._y_contact - self.overshoot
        self._y_clamp = (self._y_contact - self.clamp_force / k_c
                         - self.clamp_force / K_y)
        y_start = abs(self._poses[0][0][1])
        self._y_start = y_start
        self._creep_time = self.creep_dist / self.creep_speed
        self._y_strike0 = y_start - self.creep_dist
        # ramp segment: speed blends creep -> strike over ramp_time;
        # distance covered = integral of the smoothstep blend
        self._ramp_dist = (self.creep_speed * self.ramp_time
                           + (self.approach_speed - self.creep_speed)
                           * self.ramp_time * 0.5)
        self._y_ramp_end = self._y_strike0 - self._ramp_dist
        if self._y_ramp_end <= self._y_deep:
            raise DemonstrationFailed("strike runway too short for the speed ramp")
        self._strike_time = (self.ramp_time
                             + (self._y_ramp_end - self._y_deep) / self.approach_speed)
        return self

    @property
    def duration(self) -> float:
        return (self.settle_time + self._creep_time + self._strike_time
                + self.ease_time + self.hold_time + self.lift_time + self.tail_time)

    def nominal_contact_time(self) -> float:
        """When the target (and, at speed, the pad) crosses first contact."""
        return (self.settle_time + self._creep_time + self.ramp_time
                + (self._y_ramp_end - self._y_contact) / self.approach_speed)

    def command(self, t: float) -> OperatorCommand:
        y = self._y_start
        vy = 0.0
        z_off = 0.0
        vz = 0.0
        s = self.settle_time
        if t >= s:
            u = t - s
            if u < self._creep_time:
                y = self._y_start - self.creep_speed * u
                vy = -self.creep_speed
            elif u < self._creep_time + self._strike_time:
                u -= self._creep_time
                if u < self.ramp_time:
                    a = u / self.ramp_time
                    dv = self.approach_speed - self.creep_speed
                    # integral of the smoothstep speed blend
                    y = (self._y_strike0 - self.creep_speed * u
                         - dv * self.ramp_time * (a**3 - 0.5 * a**4))
                    vy = -(self.creep_speed + dv * _smoothstep(a))
                else:
                    y = self._y_ramp_end - self.approach_speed * (u - self.ramp_time)
                    vy = -self.approach_speed
            else:
                u -= self._creep_time + self._strike_time
                if u < self.ease_time:
                    a = u / self.ease_time
                    y = self._y_deep + (self._y_clamp - self._y_deep) * _smoothstep(a)
                    vy = (self._y_clamp - self._y_deep) * _smoothstep_rate(a, self.ease_time)
                else:
                    y = self._y_clamp
                    u -= self.ease_time
                    if u >= self.hold_time:
                        u -= self.hold_time
                        a = min(u / self.lift_time, 1.0)
                        z_off = self.lift_height * _smoothstep(a)
                        vz = self.lift_height * _smoothstep_rate(a, self.lift_time)

        p = np.zeros((2, 3))
        R = np.zeros((2, 3, 3))
        v = np.zeros((2, 6))
        for i, (p0, R0) in enumerate(self._poses):
            sign = 1.0 if p0[1] > 0 else -1.0
            p[i] = [p0[0], sign * y, p0[2] + z_off]
            R[i] = R0
            v[i, 1] = sign * vy
            v[i, 2] = vz
        return OperatorCommand(p=p, R=R, v=v, xi=np.full(2, self._xi),
                               xidot=np.zeros(2))


def run_demonstration(plant: PlantConfig, operator: ScriptedOperator,
                      rs: RsParams | None = None,
                      det: DetectorParams | None = None,
                      seed: int | None = 0) -> Recording:
    """Drive the recording-mode impedance QP with the scripted operator."""
    rs = rs or RsParams()
    det = det or DetectorParams()
    operator.attach(plant, rs)
    cfg = SessionConfig(rs=rs, det=det, seed=seed)
    session = SimSession(plant, cfg, recording_mode=True)
    n_ticks = int(round(operator.duration / rs.dt))
    log = EpisodeLog(n_ticks, n_joints=plant.arms[0].n,
                     meta={"kind": "demonstration", "seed": seed})
    for k in range(n_ticks):
        session.tick(log, command=operator.command(k * rs.dt))
    log.trim()

    rec = session.to_recording(log)
    try:
        extract_nominal_impact_time(rec, det)
    except NoImpactFound as exc:
        raise DemonstrationFailed(f"no impact detected in the demonstration: {exc}")
    box_rise = log.box[-1, 2] - log.box[0, 2]
    if box_rise < 0.7 * operator.lift_height:
        raise DemonstrationFailed(f"box only lifted {box_rise:.3f} m; clamp lost")
    if not log.pad_flag[:, -1].all():
        raise DemonstrationFailed("clamp lost before the end of the demonstration")
    return rec


def reference_from_recording(rec: Recording, rs: RsParams | None = None,
                             det: DetectorParams | None = None) -> ExtendedReference:
    rs = rs or RsParams()
    det = det or DetectorParams()
    T_r = extract_nominal_impact_time(rec, det)
    return extend(rec, T_r, rs.dT_r, filter_hz=rs.extension_filter_hz)


def run_episode(plant: PlantConfig, reference: ExtendedReference,
                variant: Variant, displacement: float, seed: int,
                rs: RsParams | None = None,
                det: DetectorParams | None = None) -> EpisodeLog:
    """One autonomous episode with the box displaced along world y."""
    rs = rs or RsParams()
    det = det or DetectorParams()
    cfg = SessionConfig(rs=rs, det=det, variant=variant, seed=seed)
    session = SimSession(plant, cfg, reference=reference, displacement=displacement)
    n_ticks = len(reference.recording.t)
    log = EpisodeLog(n_ticks, n_joints=plant.arms[0].n,
                     meta={"kind": "episode", "variant": variant.value,
                           "displacement": displacement, "seed": seed,
                           "T_r": reference.T_r})
    for _ in range(n_ticks):
        session.tick(log)
    return log.trim()


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def torque_norm_metric(log: EpisodeLog):
    """Euclidean norm of the stacked commanded torques, per tick."""
    return log.t, log.tau_norm


def windowed_average(t: np.ndarray, series: np.ndarray, T_r: float,
                     half_width: float = 0.06) -> float:
    """Mean over [T_r - half, T_r + half]: the peak/step comparison metric."""
    if T_r - half_width < t[0] - 1e-9 or T_r + half_width > t[-1] + 1e-9:
        raise WindowNotCovered(
            f"window [{T_r - half_width:.3f}, {T_r + half_width:.3f}] outside the log")
    mask = (t >= T_r - half_width - 1e-12) & (t <= T_r + half_width + 1e-12)
    return float(np.mean(series[mask]))


def mode_switch_step(log: EpisodeLog, arm: int = 0) -> float:
    """|step| of the commanded normal-direction force at the mode switch."""
    switches = np.nonzero(np.diff(log.mode.astype(int)) != 0)[0]
    if len(switches) == 0:
        return 0.0
    k = switches[0] + 1
    return float(abs(log.f_des[arm, k, 1] - log.f_des[arm, k - 1, 1]))


def max_interstep_change(log: EpisodeLog, T_r: float, arm: int = 0,
                         half_width: float = 0.06) -> float:
    mask = (log.t >= T_r - half_width) & (log.t <= T_r + half_width)
    f = log.f_des[arm, mask, 1]
    return float(np.abs(np.diff(f)).max())


# ---------------------------------------------------------------------------
# sweep experiment
# ---------------------------------------------------------------------------

@dataclass
class SweepConfig:
    runs: int = 5
    variants: tuple = (Variant.PROPOSED, Variant.NO_RS, Variant.NO_INTERIM)
    displacements: tuple = SWEEP_DISPLACEMENTS
    master_seed: int = 2024
    window_half: float = 0.06


@dataclass
class SweepResult:
    per_run: list                 # dicts: displacement, variant, run, seed, avg
    means: dict                   # (displacement, variant) -> mean over runs

    def mean(self, displacement: float, variant: Variant) -> float:
        return self.means[(round(displacement, 6), variant.value)]


def episode_seed(master_seed: int, d_idx: int, v_idx: int, run: int) -> int:
    ss = np.random.SeedSequence([master_seed, d_idx, v_idx, run])
    return int(ss.generate_state(1)[0])


def run_sweep(plant: PlantConfig, reference: ExtendedReference,
              cfg: SweepConfig | None = None, rs: RsParams | None = None,
              det: DetectorParams | None = None, out_dir=None,
              keep_logs: bool = False):
    """Displacement sweep: runs x variants x displacements episodes."""
    cfg = cfg or SweepConfig()
    rs = rs or RsParams()
    per_run = []
    logs = {}
    for d_idx, dy in enumerate(cfg.displacements):
        for v_idx, variant in enumerate(cfg.variants):
            for run in range(cfg.runs):
                seed = episode_seed(cfg.master_seed, d_idx, v_idx, run)
                log = run_episode(plant, reference, variant, dy, seed, rs=rs, det=det)
                avg = windowed_average(log.t, log.tau_norm, reference.T_r,
                                       cfg.window_half)
                per_run.append({
                    "displacement": dy, "variant": variant.value, "run": run,
                    "seed": seed, "avg_tau_norm": avg,
                    "detection_time": log.detection_time,
                    "first_contact_0": log.first_contact_time[0],
                    "first_contact_1": log.first_contact_time[1],
                    "fallbacks": log.fallbacks,
                })
                if keep_logs:
                    logs[(dy, variant, run)] = log
    means = {}
    for dy in cfg.displacements:
        for variant in cfg.variants:
            vals = [r["avg_tau_norm"] for r in per_run
                    if r["displacement"] == dy and r["variant"] == variant.value]
            means[(round(dy, 6), variant.value)] = float(np.mean(vals))
    result = SweepResult(per_run=per_run, means=means)
    if out_dir is not None:
        write_sweep_outputs(result, Path(out_dir), cfg, reference.T_r)
    if keep_logs:
        return result, logs
    return result


# ---------------------------------------------------------------------------
# CSV + plots (regenerable from the CSV alone)
# ---------------------------------------------------------------------------

PER_RUN_FIELDS = ["displacement", "variant", "run", "seed", "avg_tau_norm",
                  "detection_time", "first_contact_0", "first_contact_1",
                  "fallbacks"]


def write_sweep_csv(result: SweepResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=PER_RUN_FIELDS)
        w.writeheader()
        for row in result.per_run:
            w.writerow(row)


def read_sweep_csv(path: Path) -> SweepResult:
    per_run = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            row["displacement"] = float(row["displacement"])
            row["run"] = int(row["run"])
            row["seed"] = int(row["seed"])
            row["avg_tau_norm"] = float(row["avg_tau_norm"])
            for key in ("detection_time", "first_contact_0", "first_contact_1"):
                row[key] = float(row[key]) if row[key] not in ("", "None") else None
            row["fallbacks"] = int(row["fallbacks"])
            per_run.append(row)
    means = {}
    pairs = {(r["displacement"], r["variant"]) for r in per_run}
    for dy, var in pairs:
        vals = [r["avg_tau_norm"] for r in per_run
                if r["displacement"] == dy and r["variant"] == var]
        means[(round(dy, 6), var)] = float(np.mean(vals))
    return SweepResult(per_run=per_run, means=means)


def plot_sweep_bars(result: SweepResult, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    displacements = sorted({r["displacement"] for r in result.per_run})
    variants = ["proposed", "no_rs", "no_interim"]
    labels = {"proposed": "proposed", "no_rs": "no RS", "no_interim": "no interim"}
    width = 0.25
    xs = np.arange(len(displacements))
    fig, ax = plt.subplots(figsize=(7, 4))
    for j, var in enumerate(variants):
        vals = [result.means.get((round(d, 6), var), np.nan) for d in displacements]
        ax.bar(xs + (j - 1) * width, vals, width, label=labels[var])
    ax.set_xticks(xs)
    ax.set_xticklabels([f"{d * 1000:.0f}" for d in displacements])
    ax.set_xlabel("box displacement [mm]")
    ax.set_ylabel("avg torque norm, 120 ms window [N m]")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_episode_tau(logs_by_variant: dict, T_r: float, path: Path) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 4))
    colors = {"proposed": "tab:green", "no_rs": "tab:red", "no_interim": "tab:orange"}
    for var, logs in logs_by_variant.items():
        for i, log in enumerate(logs):
            ax.plot(log.t, log.tau_norm, color=colors.get(var, "gray"),
                    alpha=0.6, lw=0.8, label=var if i == 0 else None)
    ax.axvline(T_r, color="k", ls="--", lw=0.8)
    ax.axvspan(T_r - 0.06, T_r + 0.06, color="k", alpha=0.07)
    ax.set_xlim(max(T_r - 0.4, 0.0), T_r + 0.5)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("torque norm [N m]")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def episode_csv_rows(log: EpisodeLog):
    """Flat per-tick rows for the UI strip chart and replays."""
    header = ["t", "tau_norm", "mode", "gamma",
              "fdes0_y", "fdes1_y", "v0_y", "v1_y",
              "p0_y", "p1_y", "box_y", "box_z", "pad0", "pad1"]
    rows = []
    for k in range(len(log.t)):
        rows.append([log.t[k], log.tau_norm[k], int(log.mode[k]), log.gamma[k],
                     log.f_des[0, k, 1], log.f_des[1, k, 1],
                     log.v[0, k, 1], log.v[1, k, 1],
                     log.p[0, k, 1], log.p[1, k, 1],
                     log.box[k, 1], log.box[k, 2],
                     int(log.pad_flag[0, k]), int(log.pad_flag[1, k])])
    return header, rows


def write_episode_csv(log: EpisodeLog, path: Path) -> None:
    header, rows = episode_csv_rows(log)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_sweep_outputs(result: SweepResult, out_dir: Path, cfg: SweepConfig,
                        T_r: float) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "sweep_runs.csv"
    write_sweep_csv(result, csv_path)
    plot_sweep_bars(result, out_dir / "sweep_avg_bar.png")
    manifest = {
        "schema": "rsqp-sweep/1",
        "backend": backend_name(),
        "config": {
            "runs": cfg.runs,
            "variants": [v.value for v in cfg.variants],
            "displacements": list(cfg.displacements),
            "master_seed": cfg.master_seed,
            "window_half": cfg.window_half,
        },
        "T_r": T_r,
        "files": ["sweep_runs.csv", "sweep_avg_bar.png"],
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
