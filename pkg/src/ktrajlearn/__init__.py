"""Learning hardware-feasible non-Cartesian k-space trajectories with a reconstructor."""
from .geometry import (ConfigError, HardwareLimits, ImagingGeometry, Trajectory,
                       constraint_bounds, radial_init)
from .nufft import NUFFT, nufft_adjoint, nufft_forward
from .projector import check_feasibility, project
from .train import Pipeline, TrainSchedule, TrajectoryConfig, build_plan, run_scheme

__all__ = [
    "ConfigError", "HardwareLimits", "ImagingGeometry", "Trajectory", "constraint_bounds",
    "radial_init", "NUFFT", "nufft_adjoint", "nufft_forward", "check_feasibility", "project",
    "Pipeline", "TrainSchedule", "TrajectoryConfig", "build_plan", "run_scheme",
]
__version__ = "0.1.0"
