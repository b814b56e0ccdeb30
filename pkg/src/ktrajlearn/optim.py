"""ADAM and rectified-ADAM as pure state transitions."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

BETA1, BETA2, EPS = 0.9, 0.999, 1e-8


class NonFiniteGradient(FloatingPointError):
    pass


@dataclass(frozen=True)
class OptimState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3

    @classmethod
    def zeros(cls, shape, lr: float = 1e-3) -> "OptimState":
        return cls(np.zeros(shape), np.zeros(shape), 0, lr)


def _moments(state, grads, beta1, beta2):
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != state.m.shape:
        raise ValueError(f"gradient shape {grads.shape} != state shape {state.m.shape}")
    if not np.all(np.isfinite(grads)):
        raise NonFiniteGradient("non-finite gradient; step aborted")
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grads
    v = beta2 * state.v + (1 - beta2) * grads * grads
    return replace(state, m=m, v=v, t=t)


def adam_step(state: OptimState, params, grads, beta1=BETA1, beta2=BETA2, eps=EPS):
    state = _moments(state, grads, beta1, beta2)
    m_hat = state.m / (1 - beta1**state.t)
    v_hat = state.v / (1 - beta2**state.t)
    return state, np.asarray(params) - state.lr * m_hat / (np.sqrt(v_hat) + eps)


def radam_rho(t: int, beta2: float = BETA2) -> float:
    rho_inf = 2.0 / (1.0 - beta2) - 1.0
    return rho_inf - 2.0 * t * beta2**t / (1.0 - beta2**t)


def radam_step(state: OptimState, params, grads, beta1=BETA1, beta2=BETA2, eps=EPS):
    """Rectified ADAM (Liu et al., 2020).

    While the variance of the adaptive step is intractable (rho_t <= 4) the
    update is bias-corrected momentum SGD.
    """
    state = _moments(state, grads, beta1, beta2)
    m_hat = state.m / (1 - beta1**state.t)
    rho_inf = 2.0 / (1.0 - beta2) - 1.0
    rho = radam_rho(state.t, beta2)
    if rho <= 4.0:
        return state, np.asarray(params) - state.lr * m_hat
    rect = np.sqrt((rho - 4) * (rho - 2) * rho_inf / ((rho_inf - 4) * (rho_inf - 2) * rho))
    v_hat = state.v / (1 - beta2**state.t)
    return state, np.asarray(params) - state.lr * rect * m_hat / (np.sqrt(v_hat) + eps)
