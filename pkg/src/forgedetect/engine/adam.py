"""Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8 defaults)."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr: float = 1e-3

    @classmethod
    def for_params(cls, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls(
            m=[np.zeros_like(np.asarray(p)) for p in params],
            v=[np.zeros_like(np.asarray(p)) for p in params],
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            lr=lr,
        )


def adam_step(params, grads, state):
    """One in-place Adam update over matching lists of arrays."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


class Adam:
    """Optimizer over Tensor parameter groups with per-group learning rates."""

    def __init__(self, groups):
        """``groups``: list of (list-of-Tensors, lr) pairs."""
        self.groups = [
            (list(params), AdamState.for_params([t.data for t in params], lr))
            for params, lr in groups
        ]

    def step(self):
        for params, state in self.groups:
            grads = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in params]
            adam_step([t.data for t in params], grads, state)

    def zero_grad(self):
        for params, _ in self.groups:
            for t in params:
                t.zero_grad()
