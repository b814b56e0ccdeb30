"""Projected trajectory learning over a dyadic multi-resolution schedule.

A decimated trajectory with ``n`` control points per shot is always
expanded back to the full ``Ns`` points (uniform polyline resampling) before
ADC interpolation, so the forward model sees the same number of samples at
every level. Because the expansion is piecewise linear, the full-resolution
shot satisfies the hardware bounds exactly when the decimated shot satisfies
them scaled by the stride ratio ``s = (Ns - 1) / (n - 1)``: fine steps are
``1/s`` of a coarse step and every kink spreads its velocity change over at
most ``1/s`` of a coarse step.
"""
from __future__ import annotations

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .density import DensityEstimator
from .geometry import HardwareLimits, ImagingGeometry, constraint_bounds, radial_init
from .nufft import NUFFT
from .objective import LossWeights, combined_loss_grad
from .optim import OptimState, adam_step, radam_step
from .projector import check_feasibility, project
from .recon import make_reconstructor
from .sampling import (adc_interpolate, adc_interpolate_vjp, multires_decimate,
                       multires_upsample, resample_shots, resample_shots_vjp, stride_ratio)

log = logging.getLogger(__name__)

FEAS_TOL = 1e-8


@dataclass(frozen=True)
class TrajectoryConfig:
    n_shots: int = 8
    n_samples: int = 64
    init_span: float = 0.9

    def __post_init__(self):
        if self.n_shots < 1 or self.n_samples < 2:
            raise ValueError("need n_shots >= 1 and n_samples >= 2")


@dataclass(frozen=True)
class TrainSchedule:
    levels: tuple = (32, 16, 8, 4, 2, 1)
    steps_per_level: int = 250
    scheme: str = "hl"
    hl_block: int = 20
    hl_fine_below: int = 4  # levels below this alternate in steps_per_level / 2 blocks
    joint_steps: int | None = None  # joint steps at level 1 (HL); default steps_per_level
    recon_steps: int | None = None  # AD network phase; default steps_per_level * len(levels)
    patience: int = 100
    val_every: int = 10
    val_fraction: float = 0.1
    val_max: int = 32
    batch_size: int = 16
    dcp_every: int = 10
    dcp_iters: int = 10
    lr_traj: float = 1e-3
    lr_recon: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        levels = tuple(int(v) for v in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels or levels[-1] != 1:
            raise ValueError("levels must end at 1")
        if any(v < 1 or v & (v - 1) for v in levels):
            raise ValueError("levels must be powers of two")
        if any(a <= b for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be strictly decreasing")
        if self.scheme not in ("jl", "ad", "hl"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        counts = [self.steps_per_level, self.hl_block, self.patience, self.val_every,
                  self.batch_size, self.dcp_every, self.dcp_iters]
        if any(int(c) < 1 for c in counts):
            raise ValueError("all step counts must be >= 1")
        if not 0 < self.val_fraction < 1:
            raise ValueError("val_fraction must be in (0, 1)")

    @classmethod
    def desk(cls, **overrides) -> "TrainSchedule":
        """Desk-scale schedule: three levels of 100 steps."""
        base = dict(levels=(4, 2, 1), steps_per_level=100)
        base.update(overrides)
        return cls(**base)

    @property
    def total_joint_steps(self) -> int:
        return self.steps_per_level if self.joint_steps is None else self.joint_steps

    @property
    def total_recon_steps(self) -> int:
        if self.recon_steps is None:
            return self.steps_per_level * len(self.levels)
        return self.recon_steps


@dataclass(frozen=True)
class Phase:
    level: int
    kind: str  # "traj", "recon" or "joint"
    steps: int


def _alternate(level, total, block):
    out, kind, left = [], "traj", total
    while left > 0:
        n = min(block, left)
        out.append(Phase(level, kind, n))
        left -= n
        kind = "recon" if kind == "traj" else "traj"
    return out


def build_plan(schedule: TrainSchedule, has_params: bool = True) -> list[Phase]:
    """Ordered phases of a run.

    HL: levels >= ``hl_fine_below`` alternate trajectory-only and
    reconstructor-only blocks of ``hl_block`` steps; finer levels alternate
    blocks of ``steps_per_level // 2``; level 1 first alternates in those
    blocks and then updates both jointly for ``joint_steps``. AD learns the
    trajectory through every level, then the reconstructor alone. JL updates
    both at every step. Without reconstructor parameters, recon phases are
    dropped and joint phases only move the trajectory.
    """
    s = schedule
    half = max(s.steps_per_level // 2, 1)
    plan: list[Phase] = []
    if s.scheme == "hl":
        for level in s.levels:
            if level >= s.hl_fine_below and level != 1:
                plan += _alternate(level, s.steps_per_level, s.hl_block)
            else:
                plan += _alternate(level, s.steps_per_level, half)
            if level == 1:
                plan.append(Phase(1, "joint", s.total_joint_steps))
    elif s.scheme == "ad":
        plan = [Phase(level, "traj", s.steps_per_level) for level in s.levels]
        plan.append(Phase(1, "recon", s.total_recon_steps))
    else:
        plan = [Phase(level, "joint", s.steps_per_level) for level in s.levels]
    if not has_params:
        plan = [p if p.kind != "joint" else Phase(p.level, "traj", p.steps)
                for p in plan if p.kind != "recon"]
    return plan


class Pipeline:
    """Forward model, reconstruction, loss and gradients for one set-up."""

    def __init__(self, geom: ImagingGeometry, limits: HardwareLimits, n_samples: int,
                 loss_w: LossWeights = LossWeights(), dcp_iters: int = 10,
                 nufft_kwargs: dict | None = None):
        self.geom = geom
        self.limits = limits
        self.n = geom.matrix_size
        self.n_samples = n_samples
        self.q = limits.interp_factor
        self.loss_w = loss_w
        self.dcp_iters = dcp_iters
        self.nufft_kwargs = nufft_kwargs or {}
        self.speed, self.accel = constraint_bounds(limits, geom)

    def expand(self, shots):
        shots = np.asarray(shots, dtype=np.float64)
        if shots.shape[1] == self.n_samples:
            return shots
        return resample_shots(shots, self.n_samples)

    def points(self, shots):
        return adc_interpolate(self.expand(shots), self.q)

    def bounds(self, n_coarse: int) -> tuple[float, float]:
        s = stride_ratio(self.n_samples, n_coarse)
        return self.speed * s, self.accel * s

    def operator(self, shots) -> NUFFT:
        return NUFFT(self.points(shots), self.n, **self.nufft_kwargs)

    def density(self, shots) -> np.ndarray:
        est = DensityEstimator(self.points(shots), self.n, **self.nufft_kwargs)
        return est.weights(self.dcp_iters)

    def feasibility(self, shots):
        return check_feasibility(self.expand(shots), self.speed, self.accel, FEAS_TOL)

    def reconstruct(self, shots, images, recon, weights, op=None):
        op = op or self.operator(shots)
        y = op.forward(images)
        return recon.forward(y, op, weights)[0]

    def loss(self, shots, images, recon, weights) -> float:
        return self.loss_and_grads(shots, images, recon, weights, want_traj=False,
                                   want_params=False)[0]

    def loss_and_grads(self, shots, images, recon, weights, want_traj=True, want_params=True):
        """Mean batch loss with gradients on the (possibly decimated) shots and on theta.

        The density weights are held fixed; no gradient flows through them.
        """
        shots = np.asarray(shots, dtype=np.float64)
        images = np.asarray(images)
        if images.ndim == 2:
            images = images[None]
        op = self.operator(shots)
        y = op.forward(images)
        xhat, cache = recon.forward(y, op, weights)
        batch = images.shape[0]
        losses = np.empty(batch)
        cot = np.empty_like(xhat)
        for b in range(batch):
            losses[b], cot[b] = combined_loss_grad(images[b], xhat[b], self.loss_w)
        loss = float(losses.mean())
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite loss (per-item: {losses})")
        if not (want_traj or want_params):
            return loss, None, None
        cot /= batch
        g_dc, cot_y, g_theta = recon.backward(cache, cot, op, weights)
        g_shots = None
        if want_traj:
            g_pts = op.position_vjp_forward(images, cot_y).sum(axis=0)
            g_pts += op.position_vjp_adjoint(weights * y, g_dc).sum(axis=0)
            n_shots = shots.shape[0]
            g_full = adc_interpolate_vjp(g_pts, n_shots, self.n_samples, self.q)
            if shots.shape[1] != self.n_samples:
                g_shots = resample_shots_vjp(g_full, shots.shape[1])
            else:
                g_shots = g_full
        return loss, g_shots, g_theta

    def trajectory_step(self, shots, images, recon, weights, state: OptimState):
        """One projected ADAM step on the shots. Returns (shots', state', loss)."""
        loss, g, _ = self.loss_and_grads(shots, images, recon, weights, want_params=False)
        state, moved = adam_step(state, shots, g)
        speed, accel = self.bounds(shots.shape[1])
        return project(moved, speed, accel), state, loss


def trajectory_step(shots, images, recon, pipeline: Pipeline, weights, state: OptimState):
    return pipeline.trajectory_step(shots, images, recon, weights, state)


@dataclass
class TrainResult:
    shots: np.ndarray  # best-validation full-resolution trajectory
    recon: object
    log: list = field(default_factory=list)
    best_val: float = np.inf
    initial_val: float = np.nan


def split_dataset(count: int, val_fraction: float, seed: int):
    if count < 2:
        raise ValueError("training needs at least two images (train + validation)")
    perm = np.random.default_rng(seed).permutation(count)
    n_val = min(max(1, int(round(val_fraction * count))), count - 1)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


class _Log:
    def __init__(self, path=None, clock=time.perf_counter):
        self.records = []
        self._fh = open(path, "w") if path else None
        self._clock = clock
        self._t0 = clock()

    def write(self, **rec):
        rec["wall_time"] = round(self._clock() - self._t0, 6)
        self.records.append(rec)
        if self._fh:
            self._fh.write(json.dumps(rec) + "\n")
            self._fh.flush()

    def close(self):
        if self._fh:
            self._fh.close()


def run_scheme(schedule: TrainSchedule, images, recon_kind: str = "dcadj",
               geom: ImagingGeometry = ImagingGeometry(),
               limits: HardwareLimits = HardwareLimits(),
               traj: TrajectoryConfig = TrajectoryConfig(),
               loss_w: LossWeights = LossWeights(), log_path=None,
               init_shots=None, nufft_kwargs: dict | None = None,
               on_step=None) -> TrainResult:
    """Learn a trajectory (and reconstructor parameters) with one scheme.

    ``on_step(step, level, shots)``, if given, receives the full-resolution
    trajectory after every optimizer step.
    """
    images = np.asarray(images)
    if images.ndim != 3 or len(images) == 0:
        raise ValueError("dataset must be a non-empty (count, N, N) stack")
    if images.shape[1:] != (geom.matrix_size,) * 2:
        raise ValueError(f"images are {images.shape[1:]}, geometry expects N={geom.matrix_size}")
    s = schedule
    rng = np.random.default_rng(s.seed)
    train_idx, val_idx = split_dataset(len(images), s.val_fraction, s.seed)
    val_idx = val_idx[:s.val_max]
    pipe = Pipeline(geom, limits, traj.n_samples, loss_w, s.dcp_iters, nufft_kwargs)
    recon = make_reconstructor(recon_kind, seed=s.seed)
    has_params = recon.n_params > 0
    plan = build_plan(s, has_params)
    logger = _Log(log_path)

    if init_shots is None:
        full = radial_init(traj.n_shots, traj.n_samples, traj.init_span, pipe.speed)
    else:
        full = np.asarray(init_shots, dtype=np.float64)
    full = project(full, pipe.speed, pipe.accel)

    def val_loss(shots):
        weights = pipe.density(shots)
        return pipe.loss(shots, images[val_idx], recon, weights)

    theta_state = OptimState.zeros(recon.n_params, s.lr_recon)
    result = TrainResult(full.copy(), recon)
    best_theta = recon.params()
    step = 0
    since_best = 0
    shots = None
    level = None
    weights = None
    traj_state = None
    traj_steps_since_dcp = 0
    stop = False
    final_level = s.levels[-1]

    def evaluate_val():
        nonlocal best_theta, since_best
        v = val_loss(shots)
        logger.write(event="val", step=step, level=level, val_loss=v)
        if v < result.best_val:
            result.best_val = v
            result.shots = pipe.expand(shots).copy()
            best_theta = recon.params().copy()
            since_best = 0
        return v

    for phase in plan:
        if stop:
            break
        if phase.level != level:
            if shots is None:
                shots = multires_decimate(full, phase.level)
            else:
                shots = multires_upsample(shots)
                if shots.shape[1] != traj.n_samples // phase.level:
                    shots = multires_decimate(pipe.expand(shots), phase.level)
            level = phase.level
            shots = project(shots, *pipe.bounds(shots.shape[1]))
            traj_state = OptimState.zeros(shots.shape, s.lr_traj)
            weights = pipe.density(shots)
            traj_steps_since_dcp = 0
            logger.write(event="level", step=step, level=level, n_samples=shots.shape[1],
                         **pipe.feasibility(shots).as_dict())
            if step == 0:
                result.initial_val = evaluate_val()
        logger.write(event="phase", step=step, level=level, phase=phase.kind, steps=phase.steps)
        for _ in range(phase.steps):
            moves_traj = phase.kind in ("traj", "joint")
            moves_theta = phase.kind in ("recon", "joint") and has_params
            if moves_traj and traj_steps_since_dcp >= s.dcp_every:
                weights = pipe.density(shots)
                traj_steps_since_dcp = 0
            pick = rng.choice(train_idx, size=min(s.batch_size, len(train_idx)), replace=False)
            batch = images[np.sort(pick)]
            loss, g_shots, g_theta = pipe.loss_and_grads(
                shots, batch, recon, weights, want_traj=moves_traj, want_params=moves_theta)
            if moves_traj:
                traj_state, moved = adam_step(traj_state, shots, g_shots)
                shots = project(moved, *pipe.bounds(shots.shape[1]))
                traj_steps_since_dcp += 1
            if moves_theta:
                theta_state, theta = radam_step(theta_state, recon.params(), g_theta)
                recon.set_params(theta)
            step += 1
            since_best += 1
            if on_step is not None:
                on_step(step, level, pipe.expand(shots))
            feas = pipe.feasibility(shots)
            logger.write(event="step", step=step, level=level, phase=phase.kind, loss=loss,
                         **feas.as_dict())
            if not feas.feasible:
                raise RuntimeError(f"infeasible trajectory after step {step}: {feas}")
            if step % s.val_every == 0:
                evaluate_val()
                if level == final_level and since_best >= s.patience:
                    logger.write(event="early_stop", step=step, level=level)
                    stop = True
                    break
    if step % s.val_every:
        evaluate_val()
    if has_params:
        recon.set_params(best_theta)
    logger.write(event="done", step=step, best_val=result.best_val,
                 initial_val=result.initial_val)
    logger.close()
    result.log = logger.records
    return result


def schedule_trace(records) -> list[tuple[int, str, int]]:
    """(level, phase, steps) for every phase record of a training log."""
    return [(r["level"], r["phase"], r["steps"]) for r in records if r["event"] == "phase"]


def config_dict(schedule: TrainSchedule) -> dict:
    out = asdict(schedule)
    out["levels"] = list(schedule.levels)
    return out
