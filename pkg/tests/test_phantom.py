import numpy as np
import pytest

from ktrajlearn.phantom import phantom_generate, shepp_logan


def test_deterministic():
    a = phantom_generate(32, 3, 11)
    b = phantom_generate(32, 3, 11)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, phantom_generate(32, 3, 12))


def test_magnitude_range_and_variety():
    x = phantom_generate(64, 4, 0)
    mag = np.abs(x)
    assert mag.min() >= 0 and mag.max() <= 1 + 1e-12
    np.testing.assert_allclose(mag.max(axis=(1, 2)), 1.0)
    assert np.any(np.abs(x.imag) > 0)
    assert not np.allclose(mag[0], mag[1])


def test_zero_phase():
    x = phantom_generate(32, 2, 3, zero_phase=True)
    assert np.all(x.imag == 0)


def test_minimum_size():
    with pytest.raises(ValueError):
        phantom_generate(16, 1, 0)


def test_shepp_logan_shape():
    x = shepp_logan(64)
    assert x.shape == (64, 64) and np.abs(x).max() == pytest.approx(1.0)
