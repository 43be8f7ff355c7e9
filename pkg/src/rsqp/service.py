"""Teleoperation service: WebSocket bridge between the live simulation
and a browser client.

The control loop runs in its own thread, hard-sequenced at the control
rate; the service exchanges immutable per-tick snapshots and a
single-slot latest-command mailbox with it, so the loop never blocks on
the network. Clients only ever set reference signals; torques always
come out of the QP.
"""

from __future__ import annotations

import asyncio
import json
import os
import queue
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .control import OperatorCommand, Variant
from .detection import DetectorParams
from .dynamics import ee_kinematics
from .harness import reference_from_recording, windowed_average
from .liegroup import quat_from_rotation, rot_z, rotation_from_quat
from .model import PlantConfig, RobotState, default_plant
from .reference import NoImpactFound, RsParams, save_recording, save_reference
from .session import EpisodeLog, SessionConfig, SimSession

WIRE_SCHEMA = "rsqp-wire/1"
DECIMATION = 20          # 1 kHz -> 50 Hz state stream

ROT_PI = rot_z(np.pi)


def _mirror_command(p, R, v):
    """Map an arm-0 target onto arm 1 through the setup's half-turn symmetry."""
    return ROT_PI @ p, ROT_PI @ R, np.concatenate([ROT_PI @ v[:3], ROT_PI @ v[3:]])


class TeleopServer:
    """Owns the live sim thread and the single-session state machine."""

    def __init__(self, plant: PlantConfig | None = None,
                 rs: RsParams | None = None, det: DetectorParams | None = None,
                 out_dir=None, realtime: bool = True, seed: int = 0):
        self.plant = plant or default_plant()
        self.rs = rs or RsParams()
        self.det = det or DetectorParams()
        self.out_dir = Path(out_dir) if out_dir else None
        self.realtime = realtime
        self.seed = seed

        self._lock = threading.Lock()
        self._command: OperatorCommand | None = None
        self._recording = False
        self._replaying = False
        self._capture: EpisodeLog | None = None
        self._capture_session: SimSession | None = None
        self._replay_request = None
        self.reference = None
        self.last_recording = None
        self.last_replay_log = None

        self.state_queue: "queue.Queue[dict]" = queue.Queue(maxsize=200)
        self.event_queue: "queue.Queue[dict]" = queue.Queue(maxsize=50)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)

        self._home = []
        for arm in self.plant.arms:
            kin = ee_kinematics(arm, RobotState(self.plant.q_home, np.zeros(arm.n)))
            self._home.append((kin.p.copy(), kin.R.copy()))
        self._default_command = OperatorCommand(
            p=np.stack([h[0] for h in self._home]),
            R=np.stack([h[1] for h in self._home]),
            v=np.zeros((2, 6)),
            xi=np.full(2, float(self.plant.q_home[self.rs.posture_joint])),
            xidot=np.zeros(2),
        )

    # -- lifecycle ---------------------------------------------------------

    def start(self):
        self._thread.start()
        return self

    def stop(self):
        self._stop.set()
        self._thread.join(timeout=5.0)

    # -- client-facing operations (thread safe) -----------------------------

    def hello(self) -> dict:
        return {
            "type": "hello",
            "schema": WIRE_SCHEMA,
            "dt": self.rs.dt,
            "arms": 2,
            "home": [{"p": h[0].tolist(),
                      "quat": quat_from_rotation(h[1]).tolist()} for h in self._home],
            "box": {"half_extents": self.plant.box.half_extents.tolist(),
                    "position": self.plant.box.p.tolist()},
            "decimation": DECIMATION,
        }

    def set_command(self, msg: dict) -> dict:
        p = np.asarray(msg["p"], dtype=float).reshape(3)
        quat = np.asarray(msg["quat"], dtype=float).reshape(4)
        if abs(np.linalg.norm(quat) - 1.0) > 1e-6:
            return {"type": "error", "code": "bad_quaternion",
                    "message": "quaternion must be unit norm within 1e-6"}
        v = np.asarray(msg.get("v", np.zeros(6)), dtype=float).reshape(6)
        if not (np.isfinite(p).all() and np.isfinite(v).all()):
            return {"type": "error", "code": "bad_command",
                    "message": "command entries must be finite"}
        R = rotation_from_quat(quat)
        arm = msg.get("arm", "both-mirrored")
        cmd = OperatorCommand(
            p=self._default_command.p.copy(), R=self._default_command.R.copy(),
            v=np.zeros((2, 6)), xi=self._default_command.xi.copy(),
            xidot=np.zeros(2))
        with self._lock:
            prev = self._command
        if prev is not None:
            cmd.p[:] = prev.p
            cmd.R[:] = prev.R
            cmd.v[:] = prev.v
        if arm == "both-mirrored":
            cmd.p[0], cmd.R[0], cmd.v[0] = p, R, v
            cmd.p[1], cmd.R[1], cmd.v[1] = _mirror_command(p, R, v)
        elif arm in (0, 1):
            cmd.p[arm], cmd.R[arm], cmd.v[arm] = p, R, v
        else:
            return {"type": "error", "code": "bad_arm",
                    "message": "arm must be 0, 1, or 'both-mirrored'"}
        with self._lock:
            self._command = cmd
        return {"type": "ack", "action": "command"}

    def record(self, action: str) -> dict:
        with self._lock:
            if action == "start":
                if self._replaying:
                    return {"type": "error", "code": "busy",
                            "message": "cannot record while a replay is active"}
                if self._recording:
                    return {"type": "error", "code": "already_recording",
                            "message": "recording is already active"}
                self._recording = True
                self._capture = None    # sim thread allocates at the next tick
                return {"type": "ack", "action": "record_start"}
            if action == "stop":
                if not self._recording:
                    return {"type": "error", "code": "not_recording",
                            "message": "no recording is active"}
                self._recording = False
                return self._finalize_recording()
        return {"type": "error", "code": "bad_action",
                "message": "record action must be start or stop"}

    def _finalize_recording(self) -> dict:
        # called with the lock held; the sim thread may still be writing
        # into the tail of the buffer, so take a sliced copy instead of
        # trimming in place
        log, session = self._capture, self._capture_session
        self._capture = None
        self._capture_session = None
        if log is None or len(log) < 10:
            return {"type": "error", "code": "empty_recording",
                    "message": "recording too short to keep"}
        rec = session.to_recording(log.snapshot())
        self.last_recording = rec
        reply = {"type": "ack", "action": "record_stop",
                 "samples": int(len(rec.t)), "duration": rec.duration}
        try:
            self.reference = reference_from_recording(rec, rs=self.rs, det=self.det)
            reply["T_r"] = self.reference.T_r
        except NoImpactFound:
            self.reference = None
            reply["warning"] = "no impact detected; reference not built"
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            rec_path = self.out_dir / "recording.npz"
            save_recording(rec, rec_path)
            reply["file"] = str(rec_path)
            if self.reference is not None:
                ref_path = self.out_dir / "reference.npz"
                save_reference(self.reference, ref_path)
                reply["reference_file"] = str(ref_path)
        return reply

    def replay(self, variant: str, displacement: float) -> dict:
        names = {v.value: v for v in Variant}
        if variant not in names:
            return {"type": "error", "code": "bad_variant",
                    "message": f"variant must be one of {sorted(names)}"}
        with self._lock:
            if self._recording:
                return {"type": "error", "code": "busy",
                        "message": "replay rejected while recording is active"}
            if self._replaying:
                return {"type": "error", "code": "busy",
                        "message": "a replay is already running"}
            if self.reference is None:
                return {"type": "error", "code": "no_reference",
                        "message": "record a demonstration first"}
            self._replay_request = (names[variant], float(displacement))
        return {"type": "ack", "action": "replay"}

    def on_disconnect(self):
        with self._lock:
            if self._recording:
                self._recording = False
                self._finalize_recording()
            self._command = None

    # -- sim thread ---------------------------------------------------------

    def _emit_state(self, session: SimSession, log: EpisodeLog, k: int,
                    replaying: bool):
        msg = {
            "type": "state",
            "t": float(log.t[k]),
            "arms": [{
                "p": log.p[i, k].tolist(),
                "quat": log.quat[i, k].tolist(),
                "v": log.v[i, k].tolist(),
                "contact": bool(log.pad_flag[i, k]),
            } for i in range(2)],
            "box": {"p": log.box[k, 0:3].tolist(), "yaw": float(log.box[k, 3])},
            "tau_norm": float(log.tau_norm[k]),
            "mode": int(log.mode[k]),
            "gamma": float(log.gamma[k]),
            "recording": self._recording,
            "replaying": replaying,
        }
        try:
            self.state_queue.put_nowait(msg)
        except queue.Full:
            pass

    def _run_replay(self, variant: Variant, displacement: float):
        cfg = SessionConfig(rs=self.rs, det=self.det, variant=variant,
                            seed=self.seed)
        session = SimSession(self.plant, cfg, reference=self.reference,
                             displacement=displacement)
        n = len(self.reference.recording.t)
        log = EpisodeLog(n, n_joints=self.plant.arms[0].n)
        for k in range(n):
            session.tick(log)
            if k % DECIMATION == 0:
                self._emit_state(session, log, k, replaying=True)
            if self.realtime and k % DECIMATION == 0:
                time.sleep(self.rs.dt * DECIMATION * 0.5)
            if self._stop.is_set():
                return
        log.trim()
        self.last_replay_log = log
        avg = windowed_average(log.t, log.tau_norm, self.reference.T_r)
        done = {"type": "replay_done", "variant": variant.value,
                "displacement": displacement,
                "avg_tau_norm": avg,
                "detection_time": log.detection_time,
                "T_r": self.reference.T_r}
        try:
            self.event_queue.put_nowait(done)
        except queue.Full:
            pass

    def _loop(self):
        chunk = DECIMATION
        live = SimSession(self.plant, SessionConfig(rs=self.rs, det=self.det,
                                                    seed=self.seed),
                          recording_mode=True)
        scratch = EpisodeLog(chunk, n_joints=self.plant.arms[0].n)
        while not self._stop.is_set():
            with self._lock:
                req = self._replay_request
                self._replay_request = None
            if req is not None:
                self._replaying = True
                try:
                    self._run_replay(*req)
                finally:
                    self._replaying = False
                continue

            t0 = time.perf_counter()
            with self._lock:
                cmd = self._command or self._default_command
                recording = self._recording
                if recording and self._capture is None:
                    # generous capacity: an hour of teleoperation
                    self._capture = EpisodeLog(int(3600 / self.rs.dt),
                                               n_joints=self.plant.arms[0].n)
                    self._capture_session = live
                capture = self._capture
            for _ in range(chunk):
                if recording and capture is not None:
                    live.tick(capture, command=cmd)
                    if (len(capture) - 1) % DECIMATION == 0:
                        self._emit_state(live, capture, len(capture) - 1, False)
                else:
                    scratch._k = 0
                    live.tick(scratch, command=cmd)
                    self._emit_state(live, scratch, 0, False)
            if self.realtime:
                budget = chunk * self.rs.dt
                elapsed = time.perf_counter() - t0
                if elapsed < budget:
                    time.sleep(budget - elapsed)


def build_app(server: TeleopServer, static_dir=None):
    app = FastAPI(title="rsqp teleoperation service")
    app.state.server = server

    @app.get("/health")
    def health():
        return {"ok": True, "schema": WIRE_SCHEMA}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        await ws.send_json(server.hello())

        async def pump_outbound():
            while True:
                sent = False
                for q in (server.state_queue, server.event_queue):
                    try:
                        while True:
                            await ws.send_json(q.get_nowait())
                            sent = True
                    except queue.Empty:
                        pass
                await asyncio.sleep(0.005 if sent else 0.01)

        pump = asyncio.create_task(pump_outbound())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_json({"type": "error", "code": "bad_json",
                                        "message": "message is not valid JSON"})
                    continue
                reply = handle_message(server, msg)
                await ws.send_json(reply)
        except WebSocketDisconnect:
            pass
        finally:
            pump.cancel()
            server.on_disconnect()

    # mounted last so it cannot shadow the websocket route
    static_dir = static_dir or os.environ.get("RSQP_FRONTEND_DIST", "frontend/dist")
    if Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=str(static_dir), html=True),
                  name="ui")

    return app


def handle_message(server: TeleopServer, msg: dict) -> dict:
    if not isinstance(msg, dict) or "type" not in msg:
        return {"type": "error", "code": "bad_message",
                "message": "expected an object with a type field"}
    kind = msg["type"]
    try:
        if kind == "command":
            return server.set_command(msg)
        if kind == "record":
            return server.record(msg.get("action", ""))
        if kind == "replay":
            return server.replay(msg.get("variant", ""),
                                 msg.get("displacement", 0.0))
    except (KeyError, ValueError, TypeError) as exc:
        return {"type": "error", "code": "bad_message", "message": str(exc)}
    return {"type": "error", "code": "unknown_type",
            "message": f"unsupported message type {kind!r}"}


def run_service(plant=None, rs=None, det=None, port: int = 8765,
                host: str = "127.0.0.1", out_dir="runs/teleop"):
    import uvicorn

    server = TeleopServer(plant, rs=rs, det=det, out_dir=out_dir).start()
    app = build_app(server)
    try:
        uvicorn.run(app, host=host, port=port, log_level="warning")
    finally:
        server.stop()
