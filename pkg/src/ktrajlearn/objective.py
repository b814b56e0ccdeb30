"""Training loss (MS-SSIM / l1 / l2 blend), its gradient, and image metrics.

Structural terms act on magnitude images. The data range ``L`` is always the
peak magnitude of the reference image and is treated as a constant when
differentiating with respect to the reconstruction.

Complex gradients are returned as cotangents ``dL/dRe + 1j * dL/dIm``, so a
first-order change reads ``dL = Re(sum(conj(g) * dz))``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

WINDOW = 11
SIGMA = 1.5
K1, K2 = 0.01, 0.03
MS_WEIGHTS = np.array([0.0448, 0.2856, 0.3001, 0.2363, 0.1333])
PSNR_CAP = 99.0
L2_EPS = 1e-12


@dataclass(frozen=True)
class LossWeights:
    alpha: float = 0.998

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


def gaussian_window(size: int = WINDOW, sigma: float = SIGMA) -> np.ndarray:
    r = np.arange(size) - (size - 1) / 2
    g = np.exp(-0.5 * (r / sigma) ** 2)
    return g / g.sum()


_G = gaussian_window()


def _filt(img):
    """Separable 'valid' Gaussian filtering over the last two axes."""
    h = WINDOW // 2
    out = correlate1d(img, _G, axis=-2, mode="constant")[..., h:-h, :]
    return correlate1d(out, _G, axis=-1, mode="constant")[..., :, h:-h]


def _filt_t(img):
    """Adjoint of :func:`_filt` (zero-pad then correlate; the window is symmetric)."""
    h = WINDOW // 2
    pad = [(0, 0)] * (img.ndim - 2) + [(2 * h, 2 * h), (2 * h, 2 * h)]
    full = np.pad(img, pad)
    out = correlate1d(full, _G, axis=-2, mode="constant")[..., h:-h, :]
    return correlate1d(out, _G, axis=-1, mode="constant")[..., :, h:-h]


def _pool(img):
    s0, s1 = img.shape[-2] // 2 * 2, img.shape[-1] // 2 * 2
    img = img[..., :s0, :s1]
    return 0.25 * (img[..., ::2, ::2] + img[..., 1::2, ::2]
                   + img[..., ::2, 1::2] + img[..., 1::2, 1::2])


def _pool_t(g, shape):
    up = 0.25 * np.repeat(np.repeat(g, 2, axis=-2), 2, axis=-1)
    out = np.zeros(shape)
    out[..., :up.shape[-2], :up.shape[-1]] = up
    return out


def default_scales(n: int) -> int:
    return int(min(5, np.floor(np.log2(n / 8)))) if n >= 8 else 0


def _data_range(ref_mag):
    top = float(np.max(ref_mag)) if ref_mag.size else 0.0
    return top if top > 0 else 1.0


class _Scale:
    """SSIM statistics at one scale, kept for the backward pass."""

    def __init__(self, a, b, c1, c2):
        self.a, self.b = a, b
        self.mu_a, self.mu_b = _filt(a), _filt(b)
        self.saa = _filt(a * a) - self.mu_a**2
        self.sbb = _filt(b * b) - self.mu_b**2
        self.sab = _filt(a * b) - self.mu_a * self.mu_b
        self.lum_num = 2 * self.mu_a * self.mu_b + c1
        self.lum_den = self.mu_a**2 + self.mu_b**2 + c1
        self.cs_num = 2 * self.sab + c2
        self.cs_den = self.saa + self.sbb + c2
        self.lum = self.lum_num / self.lum_den
        self.cs = self.cs_num / self.cs_den

    def backward(self, g_lum, g_cs):
        """Map gradients w.r.t. the luminance and cs maps to a gradient w.r.t. b."""
        g_num = g_cs / self.cs_den
        g_den = -g_cs * self.cs_num / self.cs_den**2
        g_fab = 2 * g_num
        g_fbb = g_den
        g_mub = -2 * self.mu_a * g_num - 2 * self.mu_b * g_den
        if g_lum is not None:
            g_mub = g_mub + g_lum * (2 * self.mu_a / self.lum_den
                                     - 2 * self.mu_b * self.lum_num / self.lum_den**2)
        return _filt_t(g_fab) * self.a + 2 * _filt_t(g_fbb) * self.b + _filt_t(g_mub)


def _ms_ssim_forward(a, b, scales):
    n = min(a.shape[-2:])
    if scales is None:
        scales = default_scales(n)
    if scales < 1 or n // 2 ** (scales - 1) < WINDOW:
        raise ValueError(
            f"image side {n} too small for {scales} scale(s) with an {WINDOW}-pixel window"
        )
    weights = MS_WEIGHTS[:scales]
    if scales < len(MS_WEIGHTS):  # full set is used exactly as published
        weights = weights / weights.sum()
    rng = _data_range(a)
    c1, c2 = (K1 * rng) ** 2, (K2 * rng) ** 2
    stats, values = [], []
    for j in range(scales):
        if j:
            a, b = _pool(a), _pool(b)
        st = _Scale(a, b, c1, c2)
        stats.append(st)
        last = j == scales - 1
        values.append(np.mean(st.lum * st.cs) if last else np.mean(st.cs))
    values = np.array(values)
    pos = np.maximum(values, 0.0)
    score = float(np.prod(pos**weights))
    return score, stats, values, weights


def _magnitude(z):
    return np.abs(np.asarray(z))


def ms_ssim(x, xhat, scales: int | None = None) -> float:
    """Multi-scale SSIM between the magnitudes of ``x`` (reference) and ``xhat``."""
    a, b = _magnitude(x), _magnitude(xhat)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return _ms_ssim_forward(a.astype(float), b.astype(float), scales)[0]


def ms_ssim_grad_magnitude(a, b, scales: int | None = None):
    """MS-SSIM value and its gradient w.r.t. the magnitude image ``b``."""
    score, stats, values, weights = _ms_ssim_forward(a, b, scales)
    grad_b = np.zeros_like(b)
    if score == 0.0:
        return score, grad_b
    # d score / d value_j
    d_values = score * weights / values
    shapes = [st.b.shape for st in stats]
    carry = None
    for j in range(len(stats) - 1, -1, -1):
        st = stats[j]
        size = st.cs.size
        if j == len(stats) - 1:
            g_map = d_values[j] / size
            g = st.backward(g_map * st.cs, g_map * st.lum)
        else:
            g = st.backward(None, np.full(st.cs.shape, d_values[j] / size))
        if carry is not None:
            g = g + _pool_t(carry, shapes[j])
        carry = g
    return score, carry


def _l1_l2(x, xhat):
    d = np.asarray(x) - np.asarray(xhat)
    n_pix = d.shape[-1] * d.shape[-2]
    mag = np.abs(d)
    return d, mag, float(mag.sum()) / n_pix, float(np.sqrt(np.sum(mag**2))) / n_pix, n_pix


def combined_loss(x, xhat, w: LossWeights = LossWeights()) -> float:
    """``alpha (1 - MS-SSIM) + abar |x - xhat|_1 + abar^2 / 2 |x - xhat|_2``.

    Both norms act on the complex difference and are divided by the pixel
    count; the l2 term is the plain (non-squared) Euclidean norm.
    """
    x, xhat = np.asarray(x), np.asarray(xhat)
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {xhat.shape}")
    abar = 1.0 - w.alpha
    _, _, l1, l2, _ = _l1_l2(x, xhat)
    loss = abar * l1 + 0.5 * abar**2 * l2
    if w.alpha > 0:
        loss += w.alpha * (1.0 - ms_ssim(x, xhat))
    return float(loss)


def combined_loss_grad(x, xhat, w: LossWeights = LossWeights()):
    """Loss value and its complex cotangent w.r.t. ``xhat``."""
    x, xhat = np.asarray(x), np.asarray(xhat, dtype=complex)
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {xhat.shape}")
    if np.array_equal(x, xhat):
        return 0.0, np.zeros_like(xhat)
    abar = 1.0 - w.alpha
    d, mag, l1, l2, n_pix = _l1_l2(x, xhat)
    unit = np.divide(d, mag, out=np.zeros_like(d, dtype=complex), where=mag > 0)
    grad = -abar / n_pix * unit
    grad -= 0.5 * abar**2 * d / (n_pix * max(l2 * n_pix, L2_EPS))
    loss = abar * l1 + 0.5 * abar**2 * l2
    if w.alpha > 0:
        a, b = np.abs(x).astype(float), np.abs(xhat)
        score, g_mag = ms_ssim_grad_magnitude(a, b)
        loss += w.alpha * (1.0 - score)
        phase = np.divide(xhat, b, out=np.zeros_like(xhat), where=b > 0)
        grad -= w.alpha * g_mag * phase
    return float(loss), grad


def ssim_metric(x, xhat) -> float:
    """Single-scale SSIM on magnitudes (Gaussian 11x11 window, sigma 1.5)."""
    a, b = _magnitude(x).astype(float), _magnitude(xhat).astype(float)
    rng = _data_range(a)
    st = _Scale(a, b, (K1 * rng) ** 2, (K2 * rng) ** 2)
    return float(np.mean(st.lum * st.cs))


def psnr_metric(x, xhat) -> float:
    """PSNR in dB on magnitudes with peak = max |x|; identical inputs give 99 dB."""
    a, b = _magnitude(x), _magnitude(xhat)
    rmse = float(np.sqrt(np.mean((a - b) ** 2)))
    if rmse == 0.0:
        return PSNR_CAP
    return float(min(20.0 * np.log10(_data_range(a) / rmse), PSNR_CAP))
