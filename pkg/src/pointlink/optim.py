"""Adam with decoupled weight decay, plus the halving LR schedule."""

from __future__ import annotations

import numpy as np


class Adam:
    """Standard Adam update; weight decay is decoupled from the moments.

    State (m, v, t) is kept per parameter.  Updates are deterministic, so two
    optimizers fed identical gradients produce bit-identical trajectories.
    """

    def __init__(self, params, lr: float = 1e-3, betas=(0.9, 0.999),
                 eps: float = 1e-8, weight_decay: float = 0.0):
        if lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {lr}")
        self.params = [p for p in params if p.trainable]
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self._m = [np.zeros_like(p.data) for p in self.params]
        self._v = [np.zeros_like(p.data) for p in self.params]
        self._t = 0

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        self._t += 1
        b1, b2, t = self.beta1, self.beta2, self._t
        for p, m, v in zip(self.params, self._m, self._v):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1 ** t)
            v_hat = v / (1 - b2 ** t)
            if self.weight_decay:
                p.data -= self.lr * self.weight_decay * p.data
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def halved_lr(initial_lr: float, epoch: int, period: int) -> float:
    """Learning rate after halving once every `period` epochs (epoch is
    0-based)."""
    if period <= 0:
        return initial_lr
    return initial_lr * 0.5 ** (epoch // period)
