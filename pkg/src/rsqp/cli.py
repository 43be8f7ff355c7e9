"""Command-line interface: demo record/replay, sweep experiment, service."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import backend_name
from .control import Variant
from .detection import DetectorParams
from .harness import (ScriptedOperator, SweepConfig,
                      reference_from_recording, run_demonstration, run_episode,
                      run_sweep, windowed_average, write_episode_csv)
from .model import default_plant, load_plant
from .reference import RsParams, load_reference, save_recording, save_reference


def _load_config(path):
    """Optional YAML overriding RsParams / detector / operator fields."""
    rs_kw, det_kw, op_kw = {}, {}, {}
    if path:
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
        rs_kw = doc.get("rs", {})
        det_kw = doc.get("detector", {})
        op_kw = doc.get("operator", {})
    for key in ("K_r", "K_a", "K_int", "K_p"):
        if key in rs_kw:
            rs_kw[key] = tuple(float(x) for x in rs_kw[key])
    return RsParams(**rs_kw), DetectorParams(**det_kw), op_kw


def _plant(args):
    return load_plant(args.plant) if args.plant else default_plant()


def _variants(text):
    names = {v.value: v for v in Variant}
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if tok not in names:
            raise SystemExit(f"unknown variant {tok!r}; choose from {sorted(names)}")
        out.append(names[tok])
    return tuple(out)


def cmd_demo_record(args):
    rs, det, op_kw = _load_config(args.config)
    plant = _plant(args)
    operator = ScriptedOperator(**op_kw)
    rec = run_demonstration(plant, operator, rs=rs, det=det, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rec_path = out / "recording.npz"
    save_recording(rec, rec_path)
    ref = reference_from_recording(rec, rs=rs, det=det)
    ref_path = out / "reference.npz"
    save_reference(ref, ref_path)
    manifest = {
        "schema": "rsqp-demo/1",
        "backend": backend_name(),
        "seed": args.seed,
        "T_r": ref.T_r,
        "duration": rec.duration,
        "files": ["recording.npz", "reference.npz"],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    print(f"recorded {rec.duration:.2f} s demonstration, impact at T_r = {ref.T_r:.3f} s")
    print(f"wrote {rec_path} and {ref_path}")
    return 0


def cmd_demo_replay(args):
    rs, det, _ = _load_config(args.config)
    plant = _plant(args)
    ref = load_reference(args.reference)
    variant = _variants(args.variant)[0]
    log = run_episode(plant, ref, variant, args.displacement, args.seed, rs=rs, det=det)
    avg = windowed_average(log.t, log.tau_norm, ref.T_r)
    print(f"variant={variant.value} displacement={args.displacement:+.3f} m "
          f"seed={args.seed}")
    print(f"windowed avg torque norm = {avg:.3f} N m "
          f"(120 ms around T_r = {ref.T_r:.3f} s)")
    if log.detection_time is not None:
        print(f"impact detected at {log.detection_time:.3f} s on arm {log.detection_arm}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"episode_{variant.value}_{args.displacement:+.3f}_{args.seed}.csv"
        write_episode_csv(log, csv_path)
        manifest = {
            "schema": "rsqp-replay/1",
            "backend": backend_name(),
            "variant": variant.value,
            "displacement": args.displacement,
            "seed": args.seed,
            "T_r": ref.T_r,
            "avg_tau_norm": avg,
            "detection_time": log.detection_time,
            "files": [csv_path.name],
        }
        (out / f"manifest_{csv_path.stem}.json").write_text(
            json.dumps(manifest, indent=2, sort_keys=True))
        print(f"wrote {csv_path}")
    return 0


def cmd_experiment_sweep(args):
    rs, det, op_kw = _load_config(args.config)
    plant = _plant(args)
    if args.reference:
        ref = load_reference(args.reference)
    else:
        rec = run_demonstration(plant, ScriptedOperator(**op_kw), rs=rs, det=det,
                                seed=args.seed)
        ref = reference_from_recording(rec, rs=rs, det=det)
    cfg = SweepConfig(
        runs=args.runs,
        variants=_variants(args.variants),
        displacements=tuple(float(x) for x in args.displacements.split(",")),
        master_seed=args.seed,
    )
    result = run_sweep(plant, ref, cfg, rs=rs, det=det, out_dir=args.out)
    print(f"{len(result.per_run)} episodes -> {args.out}")
    for dy in cfg.displacements:
        cells = ", ".join(f"{v.value}={result.mean(dy, v):.2f}" for v in cfg.variants)
        print(f"  dy={dy:+.3f}: {cells}")
    return 0


def cmd_serve(args):
    rs, det, op_kw = _load_config(args.config)
    from .service import run_service
    run_service(_plant(args), rs=rs, det=det, port=args.port, host=args.host)
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="rsqp",
        description="Reference-spreading QP control for dual-arm impact "
                    "manipulation, in simulation.")
    parser.add_argument("--config", help="YAML file overriding control parameters")
    parser.add_argument("--plant", help="plant description YAML (default: packaged)")
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="record or replay demonstrations")
    demo_sub = demo.add_subparsers(dest="demo_command", required=True)
    rec_p = demo_sub.add_parser("record", help="scripted-operator demonstration")
    rec_p.add_argument("--out", required=True)
    rec_p.add_argument("--seed", type=int, default=0)
    rec_p.set_defaults(func=cmd_demo_record)
    rep_p = demo_sub.add_parser("replay", help="autonomous episode from a reference")
    rep_p.add_argument("--reference", required=True)
    rep_p.add_argument("--variant", default="proposed")
    rep_p.add_argument("--displacement", type=float, default=0.0)
    rep_p.add_argument("--seed", type=int, default=0)
    rep_p.add_argument("--out")
    rep_p.set_defaults(func=cmd_demo_replay)

    exp = sub.add_parser("experiment", help="batch experiments")
    exp_sub = exp.add_subparsers(dest="experiment_command", required=True)
    sweep_p = exp_sub.add_parser("sweep", help="displacement sweep with baselines")
    sweep_p.add_argument("--reference", help="reference file (default: record one)")
    sweep_p.add_argument("--runs", type=int, default=5)
    sweep_p.add_argument("--variants", default="proposed,no_rs,no_interim")
    sweep_p.add_argument("--displacements", default="-0.03,-0.015,0,0.015,0.03")
    sweep_p.add_argument("--seed", type=int, default=2024)
    sweep_p.add_argument("--out", required=True)
    sweep_p.set_defaults(func=cmd_experiment_sweep)

    serve_p = sub.add_parser("serve", help="teleoperation WebSocket service")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
