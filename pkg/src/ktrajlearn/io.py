"""On-disk formats: trajectory files, image datasets and JSON run configs."""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .geometry import ConfigError, HardwareLimits, ImagingGeometry, Trajectory
from .objective import LossWeights

MAGIC = b"KTRJ1"
VERSION = 1
# magic, version, Nc, Ns, N, fov, g_max, s_max, raster, dwell
_HEADER = struct.Struct("<5sIIII5d")


class FormatError(ValueError):
    pass


@dataclass(frozen=True)
class TrajectoryFile:
    shots: np.ndarray
    geom: ImagingGeometry
    limits: HardwareLimits

    def __post_init__(self):
        Trajectory(self.shots)  # shape and range checks

    def to_bytes(self) -> bytes:
        nc, ns, _ = self.shots.shape
        g, h = self.geom, self.limits
        head = _HEADER.pack(MAGIC, VERSION, nc, ns, g.matrix_size, g.fov, h.g_max,
                            h.s_max, h.raster_time, h.dwell_time)
        return head + np.ascontiguousarray(self.shots, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "TrajectoryFile":
        if len(raw) < _HEADER.size:
            raise FormatError("truncated trajectory header")
        magic, version, nc, ns, n, fov, g_max, s_max, dt, adc = _HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}")
        payload = raw[_HEADER.size:]
        if len(payload) != nc * ns * 2 * 8:
            raise FormatError(f"payload is {len(payload)} bytes, expected {nc * ns * 16}")
        shots = np.frombuffer(payload, dtype="<f8").reshape(nc, ns, 2).astype(np.float64)
        return cls(shots, ImagingGeometry(n, fov),
                   HardwareLimits(g_max, s_max, dt, adc))

    def save(self, path):
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "TrajectoryFile":
        return cls.from_bytes(Path(path).read_bytes())


def save_dataset(directory, images, contrast: str = "phantom"):
    """Write a (count, N, N) complex stack as one '<c8' file per image plus ``meta.json``."""
    images = np.asarray(images)
    if images.ndim != 3 or images.shape[1] != images.shape[2]:
        raise FormatError("images must be a (count, N, N) stack of square images")
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for i, img in enumerate(images):
        (d / f"{i:05d}.c8").write_bytes(np.ascontiguousarray(img, dtype="<c8").tobytes())
    meta = {"N": int(images.shape[1]), "count": int(len(images)), "contrast": contrast}
    (d / "meta.json").write_text(json.dumps(meta, indent=2))
    return meta


def load_dataset(directory) -> tuple[np.ndarray, dict]:
    d = Path(directory)
    meta_path = d / "meta.json"
    if not meta_path.exists():
        raise FormatError(f"{d} has no meta.json")
    meta = json.loads(meta_path.read_text())
    n, count = int(meta["N"]), int(meta["count"])
    out = np.empty((count, n, n), dtype=np.complex128)
    for i in range(count):
        raw = (d / f"{i:05d}.c8").read_bytes()
        if len(raw) != n * n * 8:
            raise FormatError(f"image {i} has {len(raw)} bytes, expected {n * n * 8}")
        out[i] = np.frombuffer(raw, dtype="<c8").reshape(n, n)
    return out, meta


# --- run configuration -------------------------------------------------------

def _build(cls, section: dict, name: str):
    allowed = {f.name for f in fields(cls)}
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return cls(**section)


@dataclass(frozen=True)
class RunConfig:
    geometry: ImagingGeometry
    limits: HardwareLimits
    schedule: object
    loss: LossWeights
    trajectory: object

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        from .train import TrainSchedule, TrajectoryConfig

        sections = {"geometry", "limits", "schedule", "loss", "trajectory"}
        unknown = set(raw) - sections
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        sched = dict(raw.get("schedule", {}))
        if "levels" in sched:
            sched["levels"] = tuple(sched["levels"])
        desk = TrainSchedule.desk()
        base = {f.name: getattr(desk, f.name) for f in fields(TrainSchedule)}
        unknown = set(sched) - set(base)
        if unknown:
            raise ConfigError(f"unknown keys in [schedule]: {sorted(unknown)}")
        base.update(sched)
        return cls(
            geometry=_build(ImagingGeometry, raw.get("geometry", {}), "geometry"),
            limits=_build(HardwareLimits, raw.get("limits", {}), "limits"),
            schedule=TrainSchedule(**base),
            loss=_build(LossWeights, raw.get("loss", {}), "loss"),
            trajectory=_build(TrajectoryConfig, raw.get("trajectory", {}), "trajectory"),
        )

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be an object")
        return cls.from_dict(raw)
