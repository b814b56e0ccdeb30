"""Randomized complex Shepp-Logan-style phantoms."""
from __future__ import annotations

import numpy as np

# modified Shepp-Logan (Toft): intensity, a, b, x0, y0, angle [deg]
SHEPP_LOGAN = np.array([
    [1.0, 0.69, 0.92, 0.0, 0.0, 0.0],
    [-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0],
    [-0.2, 0.11, 0.31, 0.22, 0.0, -18.0],
    [-0.2, 0.16, 0.41, -0.22, 0.0, 18.0],
    [0.1, 0.21, 0.25, 0.0, 0.35, 0.0],
    [0.1, 0.046, 0.046, 0.0, 0.1, 0.0],
    [0.1, 0.046, 0.046, 0.0, -0.1, 0.0],
    [0.1, 0.046, 0.023, -0.08, -0.605, 0.0],
    [0.1, 0.023, 0.023, 0.0, -0.606, 0.0],
    [0.1, 0.023, 0.046, 0.06, -0.605, 0.0],
])

SUPERSAMPLE = 4


def render_ellipses(ellipses, n: int, supersample: int = SUPERSAMPLE) -> np.ndarray:
    """Rasterize ellipses on an n x n grid over [-1, 1)^2 by box-averaging.

    Axis 0 of the output runs along y (top row is y = +1), axis 1 along x.
    """
    m = n * supersample
    c = (np.arange(m) + 0.5) / m * 2.0 - 1.0
    x = c[None, :]
    y = -c[:, None]
    img = np.zeros((m, m))
    for rho, a, b, x0, y0, ang in ellipses:
        th = np.deg2rad(ang)
        xr = (x - x0) * np.cos(th) + (y - y0) * np.sin(th)
        yr = -(x - x0) * np.sin(th) + (y - y0) * np.cos(th)
        img += rho * ((xr / a) ** 2 + (yr / b) ** 2 <= 1.0)
    return img.reshape(n, supersample, n, supersample).mean(axis=(1, 3))


def shepp_logan(n: int) -> np.ndarray:
    img = np.clip(render_ellipses(SHEPP_LOGAN, n), 0.0, None)
    return img / img.max()


def _random_ellipses(rng):
    e = SHEPP_LOGAN.copy()
    scale = rng.uniform(0.8, 1.0)
    rot = rng.uniform(-15.0, 15.0)
    e[1:, 0] *= rng.uniform(0.7, 1.3, len(e) - 1)
    e[2:, 1:3] *= rng.uniform(0.8, 1.2, (len(e) - 2, 2))
    e[2:, 3:5] += rng.uniform(-0.04, 0.04, (len(e) - 2, 2))
    e[2:, 5] += rng.uniform(-10.0, 10.0, len(e) - 2)
    # global similarity transform
    th = np.deg2rad(rot)
    x0, y0 = e[:, 3].copy(), e[:, 4].copy()
    e[:, 3] = scale * (x0 * np.cos(th) - y0 * np.sin(th))
    e[:, 4] = scale * (x0 * np.sin(th) + y0 * np.cos(th))
    e[:, 1:3] *= scale
    e[:, 5] += rot
    return e


def _smooth_phase(rng, n):
    c = (np.arange(n) + 0.5) / n * 2.0 - 1.0
    x = c[None, :]
    y = -c[:, None]
    coef = rng.uniform(-1.0, 1.0, 6) * np.array([np.pi, 1.0, 1.0, 0.5, 0.5, 0.5])
    return coef[0] + coef[1] * x + coef[2] * y + coef[3] * x * y + coef[4] * x**2 + coef[5] * y**2


def phantom_generate(n: int, count: int, seed: int, zero_phase: bool = False) -> np.ndarray:
    """``count`` complex phantoms of shape (n, n) with magnitudes in [0, 1].

    Each phantom perturbs the ellipse intensities, sizes, positions and
    angles and applies a random global scale and rotation. Unless
    ``zero_phase`` is set, the magnitude is modulated by a smooth random
    quadratic phase map.
    """
    if n < 32:
        raise ValueError(f"phantoms need n >= 32, got {n}")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    out = np.empty((count, n, n), dtype=np.complex128)
    for i in range(count):
        mag = np.clip(render_ellipses(_random_ellipses(rng), n), 0.0, None)
        mag /= mag.max()
        if zero_phase:
            out[i] = mag
        else:
            out[i] = mag * np.exp(1j * _smooth_phase(rng, n))
    return out
