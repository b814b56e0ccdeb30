"""Iterative (Pipe-Menon) density compensation weights.

The fixed-point iteration ``w <- w / |F H F^H w|`` is run with the
transforms taken on a 2N x 2N image grid and ``H`` a separable triangle
window of half-width N. In k-space ``F H F^H`` is then a convolution with a
Fejer kernel, which is non-negative (so the denominators never cancel) and
vanishes at one Cartesian spacing. The plain N-grid ``F F^H`` has a
Dirichlet kernel with negative lobes and the iteration oscillates.

The window is normalized so that both closed-form cases keep the N-grid
scale: a fully sampled Cartesian lattice converges to ``1 / N^2`` (which
makes ``F^H diag(w) F`` the identity) and so does a single sample at the
origin, since the window sums to ``N^2``.
"""
from __future__ import annotations

import numpy as np

from .nufft import NUFFT

DEFAULT_ITERS = 10
FLOOR = 1e-10


def fejer_window(n: int) -> np.ndarray:
    """Triangle window on the 2n grid, shape (2n, 2n), peak 1 at the centre."""
    r = np.arange(2 * n) - n
    tri = 1.0 - np.abs(r) / n
    return np.outer(tri, tri)


class DensityEstimator:
    """Reusable operator pair for repeated weight estimates on one point set."""

    def __init__(self, points, n: int, **nufft_kwargs):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or len(points) == 0:
            raise ValueError("density compensation needs a non-empty (M, 2) point set")
        self.n = n
        self.op = NUFFT(points, 2 * n, **nufft_kwargs)
        self.window = fejer_window(n)

    def apply(self, w):
        return self.op.forward(self.window * self.op.adjoint(w))

    def weights(self, iters: int = DEFAULT_ITERS) -> np.ndarray:
        if iters < 1:
            raise ValueError("iters must be >= 1")
        w = np.ones(self.op.n_points)
        for _ in range(iters):
            w = w / np.maximum(np.abs(self.apply(w)), FLOOR)
        return w


def pipe_weights(points, n: int, iters: int = DEFAULT_ITERS, **nufft_kwargs) -> np.ndarray:
    """Density compensation weights for ``points`` on an ``n`` x ``n`` image."""
    return DensityEstimator(points, n, **nufft_kwargs).weights(iters)
