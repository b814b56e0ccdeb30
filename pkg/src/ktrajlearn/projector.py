"""Euclidean projection of shots onto the hardware-feasible set.

For each shot the feasible set is the intersection of the box [-1, 1]^2 on
every point, a bound on every first difference (gradient amplitude) and a
bound on every second difference (slew rate). The projection is computed on
the dual: the box stays in the primal as clipping, and each difference
family gets one dual block of per-step 2-vectors whose prox is a block
soft-threshold. FISTA with adaptive restart drives the dual.

The dual iterate only gives an approximately feasible primal point, so the
result is finally pulled toward the shot's centroid. A constant shot has
zero differences, which makes this contraction scale both difference
families linearly and leaves the box intact by convexity.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

# ||D1||^2 <= 4, ||D2||^2 <= 16
_LIPSCHITZ = 20.0


@dataclass(frozen=True)
class FeasibilityReport:
    max_box_violation: float
    max_speed_violation: float
    max_accel_violation: float
    feasible: bool

    def as_dict(self) -> dict:
        return {
            "max_box_violation": self.max_box_violation,
            "max_speed_violation": self.max_speed_violation,
            "max_accel_violation": self.max_accel_violation,
            "feasible": self.feasible,
        }


@dataclass(frozen=True)
class ProjectionInfo:
    converged: bool
    iterations: int
    contraction: float  # smallest centroid-contraction factor applied (1 = none)


def first_diff(k):
    return np.diff(k, axis=-2)


def second_diff(k):
    return k[..., 2:, :] - 2.0 * k[..., 1:-1, :] + k[..., :-2, :]


def _first_diff_t(z):
    out = np.zeros(z.shape[:-2] + (z.shape[-2] + 1, z.shape[-1]))
    out[..., :-1, :] -= z
    out[..., 1:, :] += z
    return out


def _second_diff_t(z):
    out = np.zeros(z.shape[:-2] + (z.shape[-2] + 2, z.shape[-1]))
    out[..., :-2, :] += z
    out[..., 1:-1, :] -= 2.0 * z
    out[..., 2:, :] += z
    return out


def _step_norms(d):
    return np.linalg.norm(d, axis=-1)


def check_feasibility(shots, speed_bound: float, accel_bound: float,
                      tol: float = 1e-8) -> FeasibilityReport:
    if speed_bound <= 0 or accel_bound <= 0:
        raise ValueError("bounds must be positive")
    shots = np.asarray(shots, dtype=np.float64)
    box = max(float(np.abs(shots).max()) - 1.0, 0.0)
    speed = 0.0
    if shots.shape[-2] > 1:
        speed = max(float(_step_norms(first_diff(shots)).max()) - speed_bound, 0.0)
    accel = 0.0
    if shots.shape[-2] > 2:
        accel = max(float(_step_norms(second_diff(shots)).max()) - accel_bound, 0.0)
    return FeasibilityReport(box, speed, accel, max(box, speed, accel) <= tol)


def _shrink(v, thresh):
    norm = _step_norms(v)[..., None]
    scale = np.maximum(0.0, 1.0 - thresh / np.maximum(norm, np.finfo(float).tiny))
    return v * scale


def _contract(k, speed_bound, accel_bound):
    """Shrink each shot toward its centroid until both difference bounds hold."""
    n = k.shape[-2]
    ratio = np.ones(k.shape[:-2])
    if n > 1:
        top = _step_norms(first_diff(k)).max(axis=-1)
        ratio = np.minimum(ratio, speed_bound / np.maximum(top, np.finfo(float).tiny))
    if n > 2:
        top = _step_norms(second_diff(k)).max(axis=-1)
        ratio = np.minimum(ratio, accel_bound / np.maximum(top, np.finfo(float).tiny))
    # a hair inside so that rounding never lands on the wrong side
    ratio = np.where(ratio < 1.0, ratio * (1.0 - 1e-12), 1.0)
    centre = k.mean(axis=-2, keepdims=True)
    return centre + ratio[..., None, None] * (k - centre), float(ratio.min(initial=1.0))


def project(shots, speed_bound: float, accel_bound: float, max_iters: int = 5000,
            rel_tol: float = 1e-12, return_info: bool = False):
    """Project every shot of ``shots`` (..., Ns, 2) onto the feasible set.

    Shots are independent problems; they are stacked only for vectorization
    and the stopping test is the worst shot's relative dual step. If the
    dual has not converged after ``max_iters`` the best (last) iterate is
    still made feasible and ``info.converged`` is False.
    """
    c = np.asarray(shots, dtype=np.float64)
    if speed_bound <= 0 or accel_bound <= 0:
        raise ValueError("bounds must be positive")
    n = c.shape[-2]
    has_accel = n > 2
    z1 = np.zeros(c.shape[:-2] + (max(n - 1, 0), 2))
    z2 = np.zeros(c.shape[:-2] + (max(n - 2, 0), 2))
    y1, y2 = z1.copy(), z2.copy()
    t = 1.0
    tau = 1.0 / _LIPSCHITZ
    converged = n < 2
    it = 0

    def primal(a, b):
        back = c - _first_diff_t(a)
        if has_accel:
            back -= _second_diff_t(b)
        return np.clip(back, -1.0, 1.0)

    while not converged and it < max_iters:
        it += 1
        k = primal(y1, y2)
        n1 = _shrink(y1 + tau * first_diff(k), tau * speed_bound)
        n2 = _shrink(y2 + tau * second_diff(k), tau * accel_bound) if has_accel else y2
        d1, d2 = n1 - z1, n2 - z2
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        # gradient-based restart (O'Donoghue & Candes)
        if np.sum((y1 - n1) * d1) + np.sum((y2 - n2) * d2) > 0:
            t_next = 1.0
            y1, y2 = n1, n2
        else:
            mom = (t - 1.0) / t_next
            y1, y2 = n1 + mom * d1, n2 + mom * d2
        step = np.sqrt(np.sum(d1 * d1, axis=(-2, -1)) + np.sum(d2 * d2, axis=(-2, -1)))
        size = np.sqrt(np.sum(n1 * n1, axis=(-2, -1)) + np.sum(n2 * n2, axis=(-2, -1)))
        z1, z2, t = n1, n2, t_next
        converged = bool(np.all(step <= rel_tol * np.maximum(size, 1.0)))

    k = primal(z1, z2) if n >= 2 else np.clip(c, -1.0, 1.0)
    k, ratio = _contract(k, speed_bound, accel_bound)
    if not converged:
        log.warning("projection stopped after %d iterations without converging", it)
    if return_info:
        return k, ProjectionInfo(converged, it, ratio)
    return k
