"""Desk-scale comparison of learning schemes.

Runs AD with the DCp adjoint, AD with the denoiser and HL with the denoiser
at N = 64 (8 shots x 64 points, 200 training phantoms), then scores the
learned and initial trajectories on 32 held-out phantoms and reports the
k-space centre density. Results go to ``<out>/results.json``.
"""
import argparse
import json
import time
from pathlib import Path

import numpy as np

from ktrajlearn.experiments import DeskSetup, center_report, run_desk, score
from ktrajlearn.io import TrajectoryFile
from ktrajlearn.recon import make_reconstructor


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="runs/desk")
    ap.add_argument("--runs", nargs="+", default=["ad:dcadj", "ad:denoiser", "hl:denoiser"])
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    setup = DeskSetup()
    dcadj = make_reconstructor("dcadj")
    results = {"initial": score(setup, setup.initial_shots(), dcadj)}
    for run in args.runs:
        scheme, recon = run.split(":")
        tag = f"{scheme}_{recon}"
        t0 = time.perf_counter()
        res = run_desk(setup, scheme, recon, log_path=out / f"{tag}.jsonl")
        entry = {"seconds": time.perf_counter() - t0, "best_val": res.best_val,
                 "initial_val": res.initial_val,
                 "eval": score(setup, res.shots, res.recon),
                 "eval_dcadj": score(setup, res.shots, dcadj),
                 "center": center_report(setup, res.shots)}
        TrajectoryFile(res.shots, setup.geom, setup.limits).save(out / f"{tag}.ktrj")
        if res.recon.n_params:
            res.recon.denoiser.save(out / f"{tag}_params.bin")
        results[tag] = entry
        print(tag, json.dumps({k: entry[k] for k in ("seconds", "best_val", "center")}),
              "ssim", entry["eval"]["ssim"]["mean"], flush=True)
    (out / "results.json").write_text(json.dumps(results, indent=2, default=float))


if __name__ == "__main__":
    main()
