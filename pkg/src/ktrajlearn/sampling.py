"""ADC-rate interpolation of shots and dyadic multi-resolution resampling.

Every map here is a per-shot linear resampling of a polyline: output point
``p`` of ``P`` sits at parameter ``t_p = p * (Ns - 1) / (P - 1)`` along the
control points and is linearly interpolated between its two neighbours.
Flattening is shot-major throughout (all samples of shot 0 first).
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) row-stochastic linear-interpolation matrix."""
    if n_in < 1 or n_out < 1:
        raise ValueError("sizes must be positive")
    if n_out == 1 and n_in > 1:
        raise ValueError("cannot resample a polyline to a single point")
    mat = np.zeros((n_out, n_in))
    if n_in == 1:
        mat[:, 0] = 1.0
        mat.setflags(write=False)
        return mat
    t = np.arange(n_out) * (n_in - 1) / (n_out - 1)
    lo = np.minimum(np.floor(t).astype(int), n_in - 2)
    frac = t - lo
    rows = np.arange(n_out)
    mat[rows, lo] = 1.0 - frac
    mat[rows, lo + 1] += frac
    mat.setflags(write=False)
    return mat


def resample_shots(shots, n_out: int) -> np.ndarray:
    shots = np.asarray(shots, dtype=np.float64)
    return np.einsum("pn,cnd->cpd", resample_matrix(shots.shape[1], n_out), shots)


def resample_shots_vjp(grads, n_in: int) -> np.ndarray:
    """Transpose of :func:`resample_shots` applied to (Nc, n_out, 2) grads."""
    grads = np.asarray(grads, dtype=np.float64)
    return np.einsum("pn,cpd->cnd", resample_matrix(n_in, grads.shape[1]), grads)


def adc_interpolate(shots, q: int) -> np.ndarray:
    """Interpolate every shot by ``q`` and flatten to (Nc * Ns * q, 2) points."""
    if q < 1 or int(q) != q:
        raise ValueError(f"interpolation factor must be an integer >= 1, got {q}")
    shots = np.asarray(shots, dtype=np.float64)
    n_shots, n_samples, _ = shots.shape
    dense = resample_shots(shots, n_samples * int(q))
    return dense.reshape(-1, 2)


def adc_interpolate_vjp(point_grads, n_shots: int, n_samples: int, q: int) -> np.ndarray:
    point_grads = np.asarray(point_grads, dtype=np.float64)
    expected = (n_shots * n_samples * q, 2)
    if point_grads.shape != expected:
        raise ValueError(f"expected point gradients of shape {expected}, got {point_grads.shape}")
    per_shot = point_grads.reshape(n_shots, n_samples * q, 2)
    return resample_shots_vjp(per_shot, n_samples)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def multires_decimate(shots, factor: int) -> np.ndarray:
    """Down-sample each shot to ``Ns / factor`` control points.

    ``factor`` cannot divide both ``Ns`` and ``Ns - 1`` unless it is 1, so
    every non-trivial decimation uses uniform polyline resampling, which
    keeps both endpoints.
    """
    shots = np.asarray(shots, dtype=np.float64)
    n_samples = shots.shape[1]
    if not _is_power_of_two(factor) or n_samples % factor:
        raise ValueError(f"factor {factor} must be a power of two dividing Ns={n_samples}")
    if factor == 1:
        return shots.copy()
    return resample_shots(shots, n_samples // factor)


def multires_upsample(shots, factor: int = 2) -> np.ndarray:
    if factor != 2:
        raise ValueError("only dyadic (factor 2) up-sampling is supported")
    shots = np.asarray(shots, dtype=np.float64)
    return resample_shots(shots, 2 * shots.shape[1])


def stride_ratio(n_full: int, n_coarse: int) -> float:
    """Fine raster steps per coarse step once a shot is expanded to ``n_full``."""
    if n_coarse == n_full:
        return 1.0
    return (n_full - 1) / (n_coarse - 1)
