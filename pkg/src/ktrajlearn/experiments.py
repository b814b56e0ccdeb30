"""Desk-scale experiment set-up shared by the scripts and the acceptance suite."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import HardwareLimits, ImagingGeometry, constraint_bounds, radial_init
from .harness import center_density, evaluate, jitter_control
from .phantom import phantom_generate
from .train import TrainSchedule, TrajectoryConfig, run_scheme

RADIUS = 0.25
UNIFORM_FRACTION = np.pi * RADIUS**2 / 4


@dataclass(frozen=True)
class DeskSetup:
    geom: ImagingGeometry = ImagingGeometry(64, 0.23)
    limits: HardwareLimits = HardwareLimits()
    traj: TrajectoryConfig = TrajectoryConfig(8, 64, 0.9)
    n_train: int = 200
    n_test: int = 32
    train_seed: int = 0
    test_seed: int = 10_000
    schedule: TrainSchedule = field(default_factory=TrainSchedule.desk)

    @property
    def bounds(self):
        return constraint_bounds(self.limits, self.geom)

    def train_images(self):
        return phantom_generate(self.geom.matrix_size, self.n_train, self.train_seed)

    def test_images(self):
        return phantom_generate(self.geom.matrix_size, self.n_test, self.test_seed)

    def initial_shots(self):
        return radial_init(self.traj.n_shots, self.traj.n_samples, self.traj.init_span,
                           self.bounds[0])


def run_desk(setup: DeskSetup, scheme: str, recon: str, log_path=None, on_step=None):
    sched = TrainSchedule(**{**setup.schedule.__dict__, "scheme": scheme})
    return run_scheme(sched, setup.train_images(), recon, setup.geom, setup.limits, setup.traj,
                      log_path=log_path, on_step=on_step)


def score(setup: DeskSetup, shots, recon) -> dict:
    return evaluate(shots, recon, setup.test_images(), setup.geom, setup.limits)["summary"]


def center_report(setup: DeskSetup, learned, draws: int = 20, seed: int = 0) -> dict:
    """Centre density of learned vs initial shots and a movement-matched jitter control.

    The jitter scale equals the RMS displacement of the learned shots from the
    initialization; each jittered copy is projected onto the feasible set.
    """
    init = setup.initial_shots()
    q = setup.limits.interp_factor
    sigma = float(np.sqrt(np.mean((np.asarray(learned) - init) ** 2)))
    return {
        "learned": center_density(learned, q, RADIUS),
        "initial": center_density(init, q, RADIUS),
        "uniform": float(UNIFORM_FRACTION),
        "jitter": jitter_control(init, q, RADIUS, sigma, draws, seed, bounds=setup.bounds),
        "jitter_sigma": sigma,
    }
