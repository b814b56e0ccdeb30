"""Fix the centre-density margin used by the acceptance suite before any training run.

Random feasible perturbations of the radial initialization are the null
hypothesis: a learned trajectory has only shown a density trend if its centre
density beats every such draw. This script measures how far single jittered
draws stray above the initialization over a range of perturbation scales and
prints the largest excursion; the margin is that value rounded up.
"""
import argparse
import json

import numpy as np

from ktrajlearn.experiments import RADIUS, UNIFORM_FRACTION, DeskSetup
from ktrajlearn.harness import center_density
from ktrajlearn.projector import project


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=50)
    ap.add_argument("--sigmas", type=float, nargs="+", default=[0.02, 0.05, 0.1, 0.15, 0.2, 0.3])
    ap.add_argument("--seed", type=int, default=123)
    args = ap.parse_args()
    setup = DeskSetup()
    init = setup.initial_shots()
    q = setup.limits.interp_factor
    base = center_density(init, q, RADIUS)
    rng = np.random.default_rng(args.seed)
    rows = []
    for sigma in args.sigmas:
        vals = np.array([center_density(project(init + rng.normal(0, sigma, init.shape),
                                                *setup.bounds), q, RADIUS)
                         for _ in range(args.draws)])
        rows.append({"sigma": sigma, "mean": float(vals.mean()), "std": float(vals.std()),
                     "max": float(vals.max())})
    excursion = max(r["max"] - max(r["mean"], UNIFORM_FRACTION) for r in rows)
    margin = float(np.ceil(excursion * 100) / 100)
    print(json.dumps({"initial": base, "uniform": float(UNIFORM_FRACTION), "jitter": rows,
                      "max_excursion": excursion, "margin": margin}, indent=2))


if __name__ == "__main__":
    main()
