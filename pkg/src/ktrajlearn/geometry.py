"""Imaging geometry, trajectory container, hardware limits and initialization.

All optimization happens in the normalized k-space domain [-1, 1]^2. Physical
units only enter through :class:`HardwareLimits` and :class:`ImagingGeometry`.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GAMMA_1H = 42.576e6  # Hz/T


class ConfigError(ValueError):
    """Raised for non-physical or inconsistent configuration values."""


@dataclass(frozen=True)
class ImagingGeometry:
    matrix_size: int = 64
    fov: float = 0.23  # m

    def __post_init__(self):
        if self.matrix_size <= 0 or self.matrix_size % 2:
            raise ConfigError(f"matrix_size must be positive and even, got {self.matrix_size}")
        if not self.fov > 0:
            raise ConfigError(f"fov must be positive, got {self.fov}")

    @property
    def kmax(self) -> float:
        """Maximum spatial frequency in 1/m."""
        return self.matrix_size / (2.0 * self.fov)


@dataclass(frozen=True)
class HardwareLimits:
    g_max: float = 0.04  # T/m
    s_max: float = 180.0  # T/m/s
    raster_time: float = 10e-6  # s
    dwell_time: float = 2e-6  # s
    gamma: float = GAMMA_1H  # Hz/T

    def __post_init__(self):
        for name in ("g_max", "s_max", "raster_time", "dwell_time", "gamma"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ConfigError(f"{name} must be strictly positive, got {value}")
        ratio = self.raster_time / self.dwell_time
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 1:
            raise ConfigError(
                f"raster_time ({self.raster_time}) must be an integer multiple of "
                f"dwell_time ({self.dwell_time})"
            )

    @property
    def interp_factor(self) -> int:
        return int(round(self.raster_time / self.dwell_time))


def constraint_bounds(limits: HardwareLimits, geom: ImagingGeometry) -> tuple[float, float]:
    """Normalized per-step speed and acceleration bounds.

    Returns ``(speed_bound, accel_bound)``: the largest allowed displacement
    ``|k[n+1] - k[n]|`` and second difference ``|k[n+1] - 2k[n] + k[n-1]|``
    between consecutive raster points, in units of ``kmax``.
    """
    kmax = geom.kmax
    speed = limits.gamma * limits.g_max * limits.raster_time / kmax
    accel = limits.gamma * limits.s_max * limits.raster_time**2 / kmax
    return speed, accel


@dataclass(frozen=True)
class Trajectory:
    """Nc shots of Ns control points in normalized k-space.

    ``shots`` has shape (Nc, Ns, 2); the last axis holds (kx, ky).
    """

    shots: np.ndarray = field(repr=False)

    def __post_init__(self):
        shots = np.array(self.shots, dtype=np.float64)
        if shots.ndim != 3 or shots.shape[2] != 2:
            raise ConfigError(f"expected shape (Nc, Ns, 2), got {shots.shape}")
        if shots.shape[0] < 1 or shots.shape[1] < 2:
            raise ConfigError(f"need Nc >= 1 and Ns >= 2, got {shots.shape[:2]}")
        if not np.all(np.isfinite(shots)) or np.abs(shots).max() > 1.0:
            raise ConfigError("trajectory coordinates must lie in [-1, 1]")
        shots.setflags(write=False)
        object.__setattr__(self, "shots", shots)

    @property
    def n_shots(self) -> int:
        return self.shots.shape[0]

    @property
    def n_samples(self) -> int:
        return self.shots.shape[1]


def radial_init(n_shots: int, n_samples: int, span: float = 0.9,
                speed_bound: float | None = None) -> np.ndarray:
    """Full-spoke radial start: ``n_shots`` spokes through the origin.

    Spoke ``i`` lies at angle ``i * pi / n_shots`` and runs uniformly from
    ``-span * u_i`` to ``+span * u_i``. Straight spokes have zero second
    difference, so only the speed bound can make the start infeasible.
    """
    if n_shots < 1 or n_samples < 2:
        raise ValueError(f"need n_shots >= 1 and n_samples >= 2, got {n_shots}, {n_samples}")
    if not 0 < span <= 1:
        raise ValueError(f"span must be in (0, 1], got {span}")
    if speed_bound is not None and span > speed_bound * (n_samples - 1) / 2:
        raise ConfigError(
            f"span {span} exceeds the reachable extent {speed_bound * (n_samples - 1) / 2:.4g}"
        )
    angles = np.arange(n_shots) * np.pi / n_shots
    directions = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    radius = np.linspace(-span, span, n_samples)
    shots = radius[None, :, None] * directions[:, None, :]
    # exact zeros on the centre sample for odd lengths
    if n_samples % 2 == 1:
        shots[:, n_samples // 2] = 0.0
    return shots
