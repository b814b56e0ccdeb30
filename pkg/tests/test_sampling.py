import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ktrajlearn.projector import check_feasibility, project
from ktrajlearn.sampling import (adc_interpolate, adc_interpolate_vjp, multires_decimate,
                                 multires_upsample, resample_matrix, resample_shots,
                                 stride_ratio)


def materialized(n_shots, n_samples, q):
    """Dense matrix of the flattened interpolation map, built column by column."""
    size = n_shots * n_samples * 2
    cols = []
    for i in range(size):
        e = np.zeros(size)
        e[i] = 1.0
        cols.append(adc_interpolate(e.reshape(n_shots, n_samples, 2), q).ravel())
    return np.stack(cols, axis=1)


def test_q1_identity(rng):
    k = rng.uniform(-1, 1, (3, 7, 2))
    np.testing.assert_array_equal(adc_interpolate(k, 1), k.reshape(-1, 2))
    g = rng.standard_normal((21, 2))
    np.testing.assert_array_equal(adc_interpolate_vjp(g, 3, 7, 1), g.reshape(3, 7, 2))


def test_two_point_example():
    k = np.array([[[0.0, 0.0], [0.3, 0.0]]])
    np.testing.assert_allclose(adc_interpolate(k, 2)[:, 0], [0, 0.1, 0.2, 0.3], atol=1e-15)


def test_straight_line_stays_straight(rng):
    a, b = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
    t = np.linspace(0, 1, 9)[:, None]
    pts = adc_interpolate((a + t * (b - a))[None], 5)
    d = b - a
    cross = (pts[:, 0] - a[0]) * d[1] - (pts[:, 1] - a[1]) * d[0]
    np.testing.assert_allclose(cross, 0, atol=1e-14)


def test_bad_q():
    with pytest.raises(ValueError):
        adc_interpolate(np.zeros((1, 3, 2)), 0)


def test_vjp_shape_mismatch():
    with pytest.raises(ValueError):
        adc_interpolate_vjp(np.zeros((10, 2)), 1, 3, 3)


def test_constant_grad_mass(rng):
    v = rng.standard_normal(2)
    nc, ns, q = 2, 6, 3
    g = adc_interpolate_vjp(np.tile(v, (nc * ns * q, 1)), nc, ns, q)
    np.testing.assert_allclose(g.sum(axis=1), np.tile(ns * q * v, (nc, 1)), rtol=1e-13)


@settings(max_examples=40, deadline=None)
@given(nc=st.integers(1, 3), ns=st.integers(2, 9), q=st.integers(1, 5), seed=st.integers(0, 2**31))
def test_vjp_is_exact_transpose(nc, ns, q, seed):
    rng = np.random.default_rng(seed)
    mat = materialized(nc, ns, q)
    g = rng.standard_normal((nc * ns * q, 2))
    np.testing.assert_allclose(adc_interpolate_vjp(g, nc, ns, q).ravel(), mat.T @ g.ravel(),
                               atol=1e-12)
    d = rng.standard_normal((nc, ns, 2))
    lhs = np.dot(adc_interpolate(d, q).ravel(), g.ravel())
    rhs = np.dot(d.ravel(), adc_interpolate_vjp(g, nc, ns, q).ravel())
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@settings(max_examples=40, deadline=None)
@given(shots=arrays(np.float64, st.tuples(st.integers(1, 3), st.integers(2, 10), st.just(2)),
                    elements=st.floats(-1, 1)),
       q=st.integers(1, 6))
def test_endpoints_and_hull(shots, q):
    pts = adc_interpolate(shots, q).reshape(shots.shape[0], -1, 2)
    np.testing.assert_array_equal(pts[:, 0], shots[:, 0])
    np.testing.assert_allclose(pts[:, -1], shots[:, -1], atol=1e-15)
    assert np.all(np.abs(pts) <= 1.0)
    lo, hi = shots.min(axis=1, keepdims=True), shots.max(axis=1, keepdims=True)
    assert np.all(pts >= lo - 1e-15) and np.all(pts <= hi + 1e-15)


def test_resample_matrix_row_stochastic():
    m = resample_matrix(7, 12)
    np.testing.assert_allclose(m.sum(axis=1), 1.0)
    assert np.all(m >= 0)
    with pytest.raises(ValueError):
        resample_matrix(3, 1)


def test_decimate_identity_and_parameters(rng):
    k = rng.uniform(-1, 1, (2, 8, 2))
    np.testing.assert_array_equal(multires_decimate(k, 1), k)
    idx = np.arange(8, dtype=float)
    line = np.stack([idx / 7, np.zeros(8)], axis=1)[None]
    out = multires_decimate(line, 2)[0, :, 0] * 7
    np.testing.assert_allclose(out, [0, 7 / 3, 14 / 3, 7], atol=1e-13)


def test_decimate_straight_shot():
    t = np.linspace(-0.5, 0.7, 16)
    line = np.stack([t, 0.5 * t], axis=1)[None]
    out = multires_decimate(line, 4)[0]
    np.testing.assert_allclose(out[:, 1], 0.5 * out[:, 0], atol=1e-15)


@pytest.mark.parametrize("factor", [3, 6, 16])
def test_decimate_rejects_bad_factor(factor):
    with pytest.raises(ValueError):
        multires_decimate(np.zeros((1, 8, 2)), factor)


def test_upsample_examples():
    const = np.full((1, 5, 2), 0.3)
    np.testing.assert_allclose(multires_upsample(const), np.full((1, 10, 2), 0.3))
    a, b = np.array([-0.2, 0.1]), np.array([0.4, 0.7])
    out = multires_upsample(np.stack([a, b])[None])[0]
    t = np.array([0, 1 / 3, 2 / 3, 1])[:, None]
    np.testing.assert_allclose(out, a + t * (b - a), atol=1e-15)
    with pytest.raises(ValueError):
        multires_upsample(const, factor=4)


def test_interpolate_then_decimate_keeps_endpoints(rng):
    k = rng.uniform(-1, 1, (2, 4, 2))
    dense = adc_interpolate(k, 4).reshape(2, 16, 2)
    back = multires_decimate(dense, 4)
    np.testing.assert_array_equal(back[:, 0], k[:, 0])
    np.testing.assert_allclose(back[:, -1], k[:, -1], atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(level=st.sampled_from([2, 4, 8]), seed=st.integers(0, 2**31))
def test_scaled_coarse_bounds_give_feasible_expansion(level, seed):
    rng = np.random.default_rng(seed)
    speed, accel, ns = 0.12, 0.0055, 64
    coarse_n = ns // level
    s = stride_ratio(ns, coarse_n)
    coarse = project(rng.uniform(-1, 1, (3, coarse_n, 2)), speed * s, accel * s)
    full = resample_shots(coarse, ns)
    assert check_feasibility(full, speed, accel, 1e-8).feasible
