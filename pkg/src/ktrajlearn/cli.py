"""Command-line entry point: ``ktrajlearn <command> ...``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .geometry import ConfigError, constraint_bounds
from .harness import InfeasibleTrajectory, center_density, evaluate, export_waveforms
from .io import FormatError, RunConfig, TrajectoryFile, load_dataset, save_dataset
from .phantom import phantom_generate
from .projector import check_feasibility, project
from .recon import Denoiser, make_reconstructor
from .train import config_dict, run_scheme

log = logging.getLogger("ktrajlearn")


def cmd_optimize(args):
    cfg = RunConfig.load(args.config)
    images, meta = load_dataset(args.data)
    if meta["N"] != cfg.geometry.matrix_size:
        raise ConfigError(
            f"dataset N={meta['N']} but config matrix_size={cfg.geometry.matrix_size}")
    schedule = replace(cfg.schedule, scheme=args.scheme)
    if args.seed is not None:
        schedule = replace(schedule, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = run_scheme(schedule, images, args.recon, cfg.geometry, cfg.limits, cfg.trajectory,
                        cfg.loss, log_path=out / "train_log.jsonl")
    TrajectoryFile(result.shots, cfg.geometry, cfg.limits).save(out / "trajectory.ktrj")
    if result.recon.n_params:
        result.recon.denoiser.save(out / "params.bin")
    resolved = {"geometry": asdict(cfg.geometry), "limits": asdict(cfg.limits),
                "schedule": config_dict(schedule), "loss": asdict(cfg.loss),
                "trajectory": asdict(cfg.trajectory)}
    (out / "config.json").write_text(json.dumps(resolved, indent=2))
    summary = {"scheme": args.scheme, "recon": args.recon, "best_val_loss": result.best_val,
               "initial_val_loss": result.initial_val}
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary))


def cmd_evaluate(args):
    tf = TrajectoryFile.load(args.traj)
    images, meta = load_dataset(args.data)
    if meta["N"] != tf.geom.matrix_size:
        raise ConfigError(f"dataset N={meta['N']} but trajectory N={tf.geom.matrix_size}")
    if args.params:
        recon = make_reconstructor("denoiser", denoiser=Denoiser.load(args.params))
    else:
        recon = make_reconstructor("dcadj")
    report = evaluate(tf.shots, recon, images, tf.geom, tf.limits, out_dir=args.out)
    print(json.dumps(report["summary"]))


def cmd_project(args):
    tf = TrajectoryFile.load(args.traj)
    speed, accel = constraint_bounds(tf.limits, tf.geom)
    shots = project(tf.shots, speed, accel)
    TrajectoryFile(shots, tf.geom, tf.limits).save(args.out)
    report = check_feasibility(shots, speed, accel)
    print(json.dumps({"distance": float(np.linalg.norm(shots - tf.shots)), **report.as_dict()}))


def cmd_density(args):
    tf = TrajectoryFile.load(args.traj)
    print(center_density(tf.shots, tf.limits.interp_factor, args.radius))


def cmd_phantom(args):
    images = phantom_generate(args.n, args.count, args.seed)
    meta = save_dataset(args.out, images, contrast="phantom")
    print(json.dumps(meta))


def cmd_export(args):
    tf = TrajectoryFile.load(args.traj)
    grads = export_waveforms(tf.shots, tf.limits, tf.geom, args.out)
    print(json.dumps({"shots": grads.shape[0], "samples": grads.shape[1], "out": str(args.out)}))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ktrajlearn", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    o = sub.add_parser("optimize", help="learn a trajectory (and reconstructor)")
    o.add_argument("--config", required=True, help="JSON run configuration")
    o.add_argument("--scheme", required=True, choices=["jl", "ad", "hl"])
    o.add_argument("--recon", required=True, choices=["dcadj", "denoiser"])
    o.add_argument("--data", required=True, help="dataset directory")
    o.add_argument("--out", required=True, help="output directory")
    o.add_argument("--seed", type=int, default=None, help="overrides the schedule seed")
    o.set_defaults(func=cmd_optimize)

    e = sub.add_parser("evaluate", help="retrospective SSIM/PSNR evaluation")
    e.add_argument("--traj", required=True, help=".ktrj trajectory file")
    e.add_argument("--params", default=None, help="denoiser parameters (default: DCp adjoint)")
    e.add_argument("--data", required=True, help="dataset directory")
    e.add_argument("--out", required=True, help="output directory")
    e.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("project", help="project a trajectory onto the hardware constraints")
    pr.add_argument("--traj", required=True, help="input .ktrj file")
    pr.add_argument("--out", required=True, help="output .ktrj file")
    pr.set_defaults(func=cmd_project)

    d = sub.add_parser("density", help="fraction of samples within a k-space radius")
    d.add_argument("--traj", required=True, help=".ktrj trajectory file")
    d.add_argument("--radius", required=True, type=float, help="radius in normalized k-space")
    d.set_defaults(func=cmd_density)

    ph = sub.add_parser("phantom", help="generate a randomized complex phantom dataset")
    ph.add_argument("--n", required=True, type=int, help="image side")
    ph.add_argument("--count", required=True, type=int)
    ph.add_argument("--seed", required=True, type=int)
    ph.add_argument("--out", required=True, help="dataset directory")
    ph.set_defaults(func=cmd_phantom)

    x = sub.add_parser("export", help="write gradient waveforms (T/m) as CSV")
    x.add_argument("--traj", required=True, help=".ktrj trajectory file")
    x.add_argument("--out", required=True, help="CSV path (a .json sidecar is written next to it)")
    x.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ConfigError, FormatError, InfeasibleTrajectory, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
