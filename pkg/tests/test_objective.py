import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ktrajlearn.objective import (PSNR_CAP, LossWeights, combined_loss, combined_loss_grad,
                                  default_scales, ms_ssim, psnr_metric, ssim_metric)
from ktrajlearn.phantom import phantom_generate, shepp_logan
from oracles import complex_central_difference

torch = pytest.importorskip("torch")
from oracles import torch_combined_loss, torch_ms_ssim  # noqa: E402


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture(scope="module")
def phantom():
    return shepp_logan(64)


def test_identity_is_one(phantom):
    assert ms_ssim(phantom, phantom) == 1.0
    assert ssim_metric(phantom, phantom) == 1.0
    assert psnr_metric(phantom, phantom) == PSNR_CAP


def test_scales_rule():
    assert [default_scales(n) for n in (16, 32, 64, 128, 256, 320, 1024)] == [1, 2, 3, 4, 5, 5, 5]


def test_too_small_raises():
    with pytest.raises(ValueError):
        ms_ssim(np.ones((8, 8)), np.ones((8, 8)))
    with pytest.raises(ValueError):
        ms_ssim(np.ones((64, 64)), np.ones((64, 64)), scales=4)
    with pytest.raises(ValueError):
        ms_ssim(np.ones((64, 64)), np.ones((32, 32)))


def test_phantom_vs_zero(phantom):
    val = ms_ssim(phantom, np.zeros_like(phantom))
    assert val < 0.05
    ref = float(torch_ms_ssim(torch.tensor(np.abs(phantom)), torch.zeros(64, 64, dtype=torch.float64), 3))
    assert val == pytest.approx(ref, rel=1e-10)


def test_phantom_small_noise(phantom):
    noise = 0.01 * np.random.default_rng(0).standard_normal(phantom.shape)
    assert ms_ssim(phantom, np.abs(phantom) + noise) >= 0.98


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.sampled_from([32, 48, 64]))
def test_matches_autograd_reference(seed, n):
    rng = np.random.default_rng(seed)
    a = np.abs(rng.standard_normal((n, n))) + 0.2
    b = np.abs(a + 0.3 * rng.standard_normal((n, n)))
    ref = float(torch_ms_ssim(torch.tensor(a), torch.tensor(b), default_scales(n)))
    assert ms_ssim(a, b) == pytest.approx(ref, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("n", [192, 320])
def test_against_published_package(n):
    pm = pytest.importorskip("pytorch_msssim")
    x = np.abs(shepp_logan(n))
    xh = np.abs(x + 0.05 * np.random.default_rng(n).standard_normal(x.shape))
    t = lambda a: torch.tensor(a)[None, None]  # noqa: E731
    ref = float(pm.ms_ssim(t(x), t(xh), data_range=float(x.max())))
    # the package builds its window in single precision
    assert ms_ssim(x, xh, scales=5) == pytest.approx(ref, abs=1e-5)


def test_ssim_matches_skimage(phantom):
    sk = pytest.importorskip("skimage.metrics")
    x = np.abs(phantom)
    for xh in (np.zeros_like(x), np.abs(x + 0.05 * np.random.default_rng(2).standard_normal(x.shape))):
        ref = sk.structural_similarity(x, xh, gaussian_weights=True, sigma=1.5,
                                       use_sample_covariance=False, data_range=float(x.max()))
        assert ssim_metric(x, xh) == pytest.approx(ref, abs=1e-12)


def test_ssim_phantom_vs_zero_reference_value(phantom):
    # value produced by the standard Gaussian-window construction
    assert ssim_metric(phantom, np.zeros_like(phantom)) == pytest.approx(0.15390956806, abs=1e-9)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), c=st.floats(0.1, 50.0))
def test_scale_invariance(seed, c):
    rng = np.random.default_rng(seed)
    a = np.abs(rng.standard_normal((32, 32))) + 0.1
    b = np.abs(a + 0.2 * rng.standard_normal((32, 32)))
    assert ms_ssim(c * a, c * b) == pytest.approx(ms_ssim(a, b), rel=1e-9)


def test_psnr_arithmetic():
    x = np.zeros((16, 16))
    x[0, 0] = 1.0
    xh = x + 0.1
    xh[0, 0] = 0.9
    assert abs(psnr_metric(x, xh) - 20.0) <= 1e-9


def test_loss_zero_iff_equal(rng):
    x = cplx(rng, 32, 32)
    assert combined_loss(x, x) == 0.0
    loss, g = combined_loss_grad(x, x)
    assert loss == 0.0 and np.all(g == 0)
    assert combined_loss(x, x + 1e-6) > 0.0
    with pytest.raises(ValueError):
        combined_loss(x, x[:16])


def test_alpha_zero_reduces_to_norms(rng):
    x, xh = cplx(rng, 32, 32), cplx(rng, 32, 32)
    d = np.abs(x - xh)
    expected = d.sum() / 1024 + 0.5 * np.sqrt((d**2).sum()) / 1024
    assert combined_loss(x, xh, LossWeights(0.0)) == pytest.approx(expected, rel=1e-13)


def test_hand_composed_terms(rng):
    x = phantom_generate(32, 1, 5)[0]
    xh = x + 0.05 * cplx(rng, 32, 32)
    a = 0.998
    d = np.abs(x - xh)
    expected = (a * (1 - ms_ssim(x, xh)) + (1 - a) * d.sum() / 1024
                + (1 - a) ** 2 / 2 * np.sqrt((d**2).sum()) / 1024)
    assert combined_loss(x, xh, LossWeights(a)) == pytest.approx(expected, rel=1e-13)
    assert combined_loss(x, xh) == pytest.approx(torch_combined_loss(x, xh, a, 2), rel=1e-12)


def test_alpha_zero_gradient_closed_form(rng):
    x = rng.standard_normal((16, 16))
    xh = x + rng.uniform(0.1, 1.0, (16, 16)) * rng.choice([-1, 1], (16, 16))
    _, g = combined_loss_grad(x, xh, LossWeights(0.0))
    d = xh - x
    expected = np.sign(d) / 256 + 0.5 * d / (256 * np.linalg.norm(d))
    np.testing.assert_allclose(g, expected, rtol=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.5, 0.998, 1.0])
def test_gradient_finite_difference(alpha):
    rng = np.random.default_rng(7)
    x = phantom_generate(32, 1, 1)[0]
    xh = x + 0.1 * cplx(rng, 32, 32)
    loss, g = combined_loss_grad(x, xh, LossWeights(alpha))
    fd = complex_central_difference(lambda z: combined_loss(x, z, LossWeights(alpha)), xh, 1e-6)
    assert np.linalg.norm(g - fd) <= 1e-3 * np.linalg.norm(fd)
    assert loss == pytest.approx(combined_loss(x, xh, LossWeights(alpha)), rel=1e-14)


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_gradient_matches_autograd(seed):
    rng = np.random.default_rng(seed)
    x = cplx(rng, 48, 48)
    xh = x + 0.3 * cplx(rng, 48, 48)
    loss, g = combined_loss_grad(x, xh)
    ref_loss, ref_g = torch_combined_loss(x, xh, 0.998, default_scales(48), grad=True)
    assert loss == pytest.approx(ref_loss, rel=1e-12)
    assert np.linalg.norm(g - ref_g) <= 1e-9 * np.linalg.norm(ref_g)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), alpha=st.floats(0, 1))
def test_loss_nonnegative(seed, alpha):
    rng = np.random.default_rng(seed)
    x, xh = cplx(rng, 32, 32), cplx(rng, 32, 32)
    assert combined_loss(x, xh, LossWeights(alpha)) >= 0.0


def test_loss_weights_validation():
    for bad in (-0.1, 1.1):
        with pytest.raises(ValueError):
            LossWeights(bad)
