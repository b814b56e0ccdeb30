"""Sampling diagnostics, retrospective evaluation and gradient-waveform export."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .geometry import HardwareLimits, ImagingGeometry, constraint_bounds
from .objective import psnr_metric, ssim_metric
from .projector import check_feasibility, project
from .sampling import adc_interpolate
from .train import Pipeline

FEAS_TOL = 1e-8


class InfeasibleTrajectory(ValueError):
    def __init__(self, report):
        super().__init__(f"trajectory violates hardware limits: {report.as_dict()}")
        self.report = report


def center_density(shots, q: int, radius: float) -> float:
    """Fraction of ADC samples (control points interpolated by ``q``) within ``radius``."""
    pts = adc_interpolate(np.asarray(shots, dtype=np.float64), q)
    return float(np.mean(np.hypot(pts[:, 0], pts[:, 1]) <= radius))


def radial_line_fraction(radius: float, span: float) -> float:
    """Fraction of a centred spoke of half-length ``span`` lying within ``radius``."""
    return float(min(radius / span, 1.0))


def jitter_control(shots, q: int, radius: float, sigma: float, draws: int = 20, seed: int = 0,
                   bounds: tuple[float, float] | None = None) -> float:
    """Mean centre density of randomly perturbed copies of ``shots``.

    Each draw adds isotropic Gaussian noise of scale ``sigma`` to every control
    point; with ``bounds = (speed, accel)`` the result is projected back onto
    the feasible set, otherwise it is clipped to the square.
    """
    rng = np.random.default_rng(seed)
    shots = np.asarray(shots, dtype=np.float64)
    vals = []
    for _ in range(draws):
        moved = shots + rng.normal(0.0, sigma, shots.shape)
        moved = project(moved, *bounds) if bounds else np.clip(moved, -1.0, 1.0)
        vals.append(center_density(moved, q, radius))
    return float(np.mean(vals))


def aggregate(values) -> dict:
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"mean": float(v.mean()), "median": float(med), "q1": float(q1), "q3": float(q3),
            "count": int(v.size)}


def evaluate(shots, recon, images, geom: ImagingGeometry, limits: HardwareLimits = HardwareLimits(),
             out_dir=None, dcp_iters: int = 10, chunk: int = 16) -> dict:
    """Simulate acquisition of every image along ``shots``, reconstruct and score.

    Writes ``per_image.csv`` and ``summary.json`` to ``out_dir`` when given.
    """
    images = np.asarray(images)
    if images.ndim != 3 or images.shape[1:] != (geom.matrix_size,) * 2:
        raise ValueError(f"dataset images {images.shape[1:]} do not match N={geom.matrix_size}")
    shots = np.asarray(shots, dtype=np.float64)
    pipe = Pipeline(geom, limits, shots.shape[1], dcp_iters=dcp_iters)
    op = pipe.operator(shots)
    weights = pipe.density(shots)
    rows = []
    for start in range(0, len(images), chunk):
        block = images[start:start + chunk]
        xhat = pipe.reconstruct(shots, block, recon, weights, op=op)
        for j in range(len(block)):
            rows.append({"index": start + j, "ssim": ssim_metric(block[j], xhat[j]),
                         "psnr": psnr_metric(block[j], xhat[j])})
    summary = {"ssim": aggregate([r["ssim"] for r in rows]),
               "psnr": aggregate([r["psnr"] for r in rows]),
               "recon": recon.kind}
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "per_image.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["index", "ssim", "psnr"])
            writer.writeheader()
            writer.writerows({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()}
                             for r in rows)
        (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return {"rows": rows, "summary": summary}


# --- waveforms ----------------------------------------------------------------

def gradient_waveforms(shots, limits: HardwareLimits, geom: ImagingGeometry) -> np.ndarray:
    """Physical gradients (T/m), shape (Nc, Ns - 1, 2), from normalized control points."""
    kappa = np.asarray(shots, dtype=np.float64) * geom.kmax
    return np.diff(kappa, axis=1) / (limits.gamma * limits.raster_time)


def integrate_waveforms(grads, start, limits: HardwareLimits, geom: ImagingGeometry) -> np.ndarray:
    """Inverse of :func:`gradient_waveforms` given each shot's normalized start point."""
    step = np.asarray(grads) * (limits.gamma * limits.raster_time / geom.kmax)
    start = np.asarray(start, dtype=np.float64)[:, None, :]
    return np.concatenate([start, start + np.cumsum(step, axis=1)], axis=1)


def export_waveforms(shots, limits: HardwareLimits, geom: ImagingGeometry, path=None):
    """Check feasibility, then write (shot, sample, Gx, Gy) rows plus a start-point sidecar.

    Raises :class:`InfeasibleTrajectory` with the full report if any limit is exceeded.
    """
    shots = np.asarray(shots, dtype=np.float64)
    speed, accel = constraint_bounds(limits, geom)
    report = check_feasibility(shots, speed, accel, FEAS_TOL)
    if not report.feasible:
        raise InfeasibleTrajectory(report)
    grads = gradient_waveforms(shots, limits, geom)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["shot", "sample", "Gx", "Gy"])
            for c in range(grads.shape[0]):
                for n in range(grads.shape[1]):
                    gx, gy = (repr(float(v)) for v in grads[c, n])
                    writer.writerow([c, n, gx, gy])
        meta = {"start": shots[:, 0].tolist(), "raster_time": limits.raster_time,
                "gamma": limits.gamma, "kmax": geom.kmax, "units": "T/m",
                "max_gradient": float(np.max(np.linalg.norm(grads, axis=-1), initial=0.0)),
                "max_slew": float(np.max(np.linalg.norm(np.diff(grads, axis=1), axis=-1),
                                         initial=0.0) / limits.raster_time)}
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2))
    return grads


def read_waveforms(path):
    """Load a CSV written by :func:`export_waveforms`; returns (grads, start)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(Path(str(path) + ".json").read_text())
    start = np.asarray(meta["start"], dtype=np.float64)
    nc = len(start)
    grads = data[:, 2:4].reshape(nc, -1, 2) if data.size else np.zeros((nc, 0, 2))
    return grads, start
