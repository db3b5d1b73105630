"""Adaptive-moment optimizer and learning-rate schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class LRSchedule:
    """Fixed or cosine-annealed learning rate."""

    kind: str = "fixed"        # fixed | cosine
    lr: float = 4e-4
    lr_min: float = 1e-5
    total_steps: int = 1

    def __post_init__(self):
        if self.kind not in ("fixed", "cosine"):
            raise ValueError(f"unknown schedule {self.kind!r}")

    def at(self, step: int) -> float:
        if self.kind == "fixed":
            return self.lr
        frac = min(step, self.total_steps) / max(self.total_steps, 1)
        return self.lr_min + 0.5 * (self.lr - self.lr_min) * (1.0 + math.cos(math.pi * frac))


class Adam:
    """Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8).

    ``step`` rejects updates containing non-finite gradients: parameters
    and moments stay untouched and the step reports failure so the
    training loop can log and continue.
    """

    def __init__(self, params: dict, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params = params
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(p.numpy()) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.numpy()) for k, p in params.items()}
        self.t = 0

    def step(self, lr: float) -> bool:
        """Apply one update from the gradients stored on the parameters.

        Returns False (and changes nothing) if any gradient is NaN/Inf.
        Parameters without an accumulated gradient are skipped.
        """
        grads = {}
        for k, p in self.params.items():
            if p.grad is None:
                continue
            if not np.isfinite(p.grad).all():
                return False
            grads[k] = p.grad
        self.t += 1
        b1c = 1.0 - self.beta1 ** self.t
        b2c = 1.0 - self.beta2 ** self.t
        for k, g in grads.items():
            m = self.m[k]
            v = self.v[k]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)
            p = self.params[k]
            p.data = (p.data - update).astype(p.dtype, copy=False)
        return True
