"""Reconstructors: density-compensated adjoint and a small residual denoiser.

Every reconstructor maps ``(y, op, weights, theta)`` to an image and can pull
an image cotangent back to cotangents on ``y`` and on ``theta``. The
density-compensated adjoint has an empty parameter vector.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .nufft import NUFFT

CHANNELS = (2, 16, 16, 2)
KERNEL = 3


def dcp_adjoint_recon(y, op: NUFFT, weights) -> np.ndarray:
    """``F^H (weights * y)``."""
    y = np.asarray(y)
    if y.shape[-1] != op.n_points or np.shape(weights) != (op.n_points,):
        raise ValueError("samples, weights and point set sizes differ")
    return op.adjoint(weights * y)


# -- convolution primitives on (B, C, H, W) real arrays --------------------

def _windows(x):
    pad = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    return sliding_window_view(pad, (KERNEL, KERNEL), axis=(2, 3))


def conv2d(x, w, b):
    """3x3 'same' cross-correlation, zero padded. w: (Cout, Cin, 3, 3)."""
    return np.einsum("bchwij,ocij->bohw", _windows(x), w, optimize=True) + b[:, None, None]


def conv2d_backward(x, w, g):
    """Gradients of ``sum(g * conv2d(x, w, b))`` w.r.t. (x, w, b)."""
    gw = np.einsum("bchwij,bohw->ocij", _windows(x), g, optimize=True)
    gb = g.sum(axis=(0, 2, 3))
    flipped = w[:, :, ::-1, ::-1]
    gx = np.einsum("bohwij,ocij->bchw", _windows(g), flipped, optimize=True)
    return gx, gw, gb


@dataclass
class Denoiser:
    """conv-ReLU-conv-ReLU-conv residual block over (real, imag) channels."""

    layers: list = field(default_factory=list)  # [(w, b), ...]
    seed: int | None = None

    @classmethod
    def init(cls, seed: int = 0) -> "Denoiser":
        rng = np.random.default_rng(seed)
        layers = []
        pairs = list(zip(CHANNELS[:-1], CHANNELS[1:]))
        for i, (cin, cout) in enumerate(pairs):
            if i == len(pairs) - 1:
                w = np.zeros((cout, cin, KERNEL, KERNEL))
            else:
                # He-normal for ReLU layers
                w = rng.normal(0.0, np.sqrt(2.0 / (cin * KERNEL * KERNEL)),
                               (cout, cin, KERNEL, KERNEL))
            layers.append((w, np.zeros(cout)))
        return cls(layers, seed)

    @property
    def shapes(self):
        out = []
        for w, b in self.layers:
            out += [list(w.shape), list(b.shape)]
        return out

    @property
    def size(self) -> int:
        return sum(w.size + b.size for w, b in self.layers)

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in self.layers])

    def with_flat(self, theta) -> "Denoiser":
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.size,):
            raise ValueError(f"expected {self.size} parameters, got {theta.shape}")
        layers, pos = [], 0
        for w, b in self.layers:
            nw = theta[pos:pos + w.size].reshape(w.shape)
            pos += w.size
            nb = theta[pos:pos + b.size].copy()
            pos += b.size
            layers.append((nw.copy(), nb))
        return Denoiser(layers, self.seed)

    def save(self, path) -> None:
        """Little-endian float64 vector plus a JSON sidecar ``<path>.json``."""
        path = Path(path)
        self.flat().astype("<f8").tofile(path)
        meta = {"shapes": self.shapes, "seed": self.seed, "dtype": "<f8"}
        Path(str(path) + ".json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, path) -> "Denoiser":
        path = Path(path)
        meta = json.loads(Path(str(path) + ".json").read_text())
        theta = np.fromfile(path, dtype="<f8")
        template = cls.init(0)
        if [list(s) for s in meta["shapes"]] != template.shapes:
            raise ValueError(
                f"checkpoint layer shapes {meta['shapes']} do not match the architecture")
        model = template.with_flat(theta)
        model.seed = meta.get("seed")
        return model


def _split(image):
    image = np.asarray(image)
    return np.stack([image.real, image.imag], axis=-3).astype(np.float64)


def denoiser_forward(params: Denoiser, image, return_cache: bool = False):
    """Residual denoiser on a complex image (..., N, N)."""
    image = np.asarray(image)
    lead = image.shape[:-2]
    h = _split(image).reshape((-1, 2) + image.shape[-2:])
    cache = [h]
    n_layers = len(params.layers)
    for i, (w, b) in enumerate(params.layers):
        h = conv2d(h, w, b)
        if i < n_layers - 1:
            cache.append(h)
            h = np.maximum(h, 0.0)
            cache.append(h)
    out = image + (h[:, 0] + 1j * h[:, 1]).reshape(lead + image.shape[-2:])
    if return_cache:
        return out, cache
    return out


def denoiser_backward(params: Denoiser, image, cotangent, cache=None):
    """Cotangents on the flat parameter vector and on the input image."""
    image = np.asarray(image)
    cot = np.asarray(cotangent)
    if cache is None:
        _, cache = denoiser_forward(params, image, return_cache=True)
    g = _split(cot).reshape((-1, 2) + cot.shape[-2:])
    grads = [None] * len(params.layers)
    # cache = [x0, pre1, post1, pre2, post2]
    n_layers = len(params.layers)
    for i in range(n_layers - 1, -1, -1):
        w, _ = params.layers[i]
        layer_in = cache[2 * i]
        gx, gw, gb = conv2d_backward(layer_in, w, g)
        grads[i] = (gw, gb)
        if i > 0:
            pre = cache[2 * i - 1]
            g = gx * (pre > 0)
        else:
            g = gx
    g_in = cot + (g[:, 0] + 1j * g[:, 1]).reshape(cot.shape)
    theta_grad = np.concatenate([np.concatenate([gw.ravel(), gb]) for gw, gb in grads])
    return theta_grad, g_in


class DCpAdjoint:
    """Parameter-free reconstructor."""

    kind = "dcadj"
    n_params = 0

    def params(self) -> np.ndarray:
        return np.zeros(0)

    def set_params(self, theta) -> None:
        if np.size(theta):
            raise ValueError("the DCp adjoint has no parameters")

    def forward(self, y, op, weights):
        x_dc = dcp_adjoint_recon(y, op, weights)
        return x_dc, None

    def backward(self, cache, cot_image, op, weights):
        """Returns (cotangent on the DCp image, cotangent on y, parameter grads)."""
        return cot_image, weights * op.forward(cot_image), np.zeros(0)


class DenoisedDCpAdjoint:
    """DCp adjoint followed by :func:`denoiser_forward`."""

    kind = "denoiser"

    def __init__(self, denoiser: Denoiser):
        self.denoiser = denoiser

    @property
    def n_params(self) -> int:
        return self.denoiser.size

    def params(self) -> np.ndarray:
        return self.denoiser.flat()

    def set_params(self, theta) -> None:
        self.denoiser = self.denoiser.with_flat(theta)

    def forward(self, y, op, weights):
        x_dc = dcp_adjoint_recon(y, op, weights)
        out, cache = denoiser_forward(self.denoiser, x_dc, return_cache=True)
        return out, (x_dc, cache)

    def backward(self, cache, cot_image, op, weights):
        x_dc, net_cache = cache
        g_theta, g_dc = denoiser_backward(self.denoiser, x_dc, cot_image, net_cache)
        return g_dc, weights * op.forward(g_dc), g_theta


def make_reconstructor(kind: str, seed: int = 0, denoiser: Denoiser | None = None):
    if kind == "dcadj":
        return DCpAdjoint()
    if kind == "denoiser":
        return DenoisedDCpAdjoint(denoiser if denoiser is not None else Denoiser.init(seed))
    raise ValueError(f"unknown reconstructor {kind!r}")
