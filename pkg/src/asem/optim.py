"""Adam optimizer and the step-decay learning-rate schedule.

The optimizer is functional: a step maps (params, grads, state) to new params
and a new state without mutating its inputs, which keeps training runs
replayable and easy to test against scalar oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import EpochOutOfRangeError, ShapeMismatchError


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if not (0.0 <= self.beta1 < 1.0) or not (0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")


@dataclass(frozen=True)
class AdamState:
    """First/second moment estimates and the step counter."""

    step: int
    m: tuple[np.ndarray, ...] = field(repr=False)
    v: tuple[np.ndarray, ...] = field(repr=False)


def adam_init(params) -> AdamState:
    """Zeroed moments shaped like ``params`` (a sequence of arrays)."""
    params = list(params)
    return AdamState(
        step=0,
        m=tuple(np.zeros_like(p) for p in params),
        v=tuple(np.zeros_like(p) for p in params),
    )


def adam_step(params, grads, state: AdamState, cfg: AdamConfig, lr: float | None = None):
    """One Adam update over a parameter list.

    Bias-corrected moments, epsilon added after the square root:
        m <- b1 m + (1 - b1) g        mhat = m / (1 - b1^t)
        v <- b2 v + (1 - b2) g^2      vhat = v / (1 - b2^t)
        p <- p - lr * mhat / (sqrt(vhat) + eps)

    ``lr`` overrides ``cfg.lr`` so a schedule can drive the step size.
    Returns (new_params, new_state).
    """
    params = list(params)
    grads = list(grads)
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatchError(
            f"param/grad/state lengths differ: {len(params)}/{len(grads)}/{len(state.m)}"
        )
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeMismatchError(f"param shape {p.shape} vs grad shape {g.shape}")

    step = state.step + 1
    step_lr = cfg.lr if lr is None else lr
    c1 = 1.0 - cfg.beta1**step
    c2 = 1.0 - cfg.beta2**step
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        update = step_lr * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
        new_params.append(p - update)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(step=step, m=tuple(new_m), v=tuple(new_v))


@dataclass(frozen=True)
class LrSchedule:
    """Step decay: multiply the base rate by ``decay_factor`` every ``decay_every`` epochs."""

    base_lr: float = 1e-4
    decay_factor: float = 0.1
    decay_every: int = 20
    total_epochs: int = 50

    def __post_init__(self):
        if self.base_lr <= 0:
            raise ValueError(f"base_lr must be > 0, got {self.base_lr}")
        if not (0.0 < self.decay_factor <= 1.0):
            raise ValueError(f"decay_factor must be in (0, 1], got {self.decay_factor}")
        if self.decay_every < 1 or self.total_epochs < 0:
            raise ValueError("decay_every must be >= 1 and total_epochs >= 0")


def lr_at_epoch(schedule: LrSchedule, epoch: int) -> float:
    """Learning rate for a 0-based epoch index.

    The rate drops at epochs decay_every, 2*decay_every, ... (inclusive).
    """
    if epoch < 0 or epoch >= schedule.total_epochs:
        raise EpochOutOfRangeError(
            f"epoch {epoch} outside [0, {schedule.total_epochs})"
        )
    return schedule.base_lr * schedule.decay_factor ** (epoch // schedule.decay_every)
