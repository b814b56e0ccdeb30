import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ktrajlearn.optim import (NonFiniteGradient, OptimState, adam_step, radam_rho,
                              radam_step)


def test_zero_grads_leave_params(rng):
    p = rng.standard_normal(5)
    for step in (adam_step, radam_step):
        _, out = step(OptimState.zeros(5), p, np.zeros(5))
        np.testing.assert_array_equal(out, p)


@settings(max_examples=30, deadline=None)
@given(g=st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6), sign=st.integers(0, 1))
def test_adam_first_step_is_signed_lr(g, sign):
    g = np.array(g) * (-1) ** sign
    state, out = adam_step(OptimState.zeros(g.shape, lr=1e-3), np.zeros_like(g), g)
    np.testing.assert_allclose(out, -1e-3 * np.sign(g), rtol=1e-4)
    assert state.t == 1


def test_adam_two_scalar_steps_by_hand():
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-8
    x, m, v = 1.0, 0.0, 0.0
    state = OptimState.zeros((), lr)
    p = np.array(1.0)
    for t, g in enumerate([0.5, -0.2], start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x = x - lr * (m / (1 - b1**t)) / (np.sqrt(v / (1 - b2**t)) + eps)
        state, p = adam_step(state, p, np.array(g))
        assert float(p) == pytest.approx(x, rel=1e-15)


def test_radam_first_step_is_momentum_sgd():
    assert radam_rho(1) <= 4.0
    g = np.array([0.3, -2.0])
    _, out = radam_step(OptimState.zeros(2, lr=0.1), np.zeros(2), g)
    np.testing.assert_allclose(out, -0.1 * g, rtol=1e-14)


def test_radam_rho_switches_on_and_tends_to_limit():
    rhos = [radam_rho(t) for t in range(1, 8)]
    assert rhos[0] == pytest.approx(1.0, abs=1e-9)
    assert any(r > 4 for r in rhos) and rhos[0] <= 4
    rho_inf = 2 / (1 - 0.999) - 1
    assert radam_rho(100_000) == pytest.approx(rho_inf, rel=1e-9)


def test_radam_approaches_adam_for_constant_grads():
    g = np.array([0.7, -0.1, 3.0])
    sa = sr = OptimState.zeros(3, lr=1e-3)
    pa = pr = np.zeros(3)
    for _ in range(20_000):
        sa, na = adam_step(sa, pa, g)
        sr, nr = radam_step(sr, pr, g)
        da, dr = na - pa, nr - pr
        pa, pr = na, nr
    np.testing.assert_allclose(dr, da, rtol=2e-3)


@pytest.mark.parametrize("step", [adam_step, radam_step])
def test_nonfinite_gradient_aborts(step):
    with pytest.raises(NonFiniteGradient):
        step(OptimState.zeros(2), np.zeros(2), np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        step(OptimState.zeros(2), np.zeros(2), np.ones(3))


def test_state_is_not_mutated(rng):
    s0 = OptimState.zeros(4)
    s1, _ = adam_step(s0, np.zeros(4), rng.standard_normal(4))
    assert s0.t == 0 and np.all(s0.m == 0) and s1.t == 1
