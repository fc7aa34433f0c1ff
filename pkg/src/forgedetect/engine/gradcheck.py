"""Central finite-difference verification of reverse-mode gradients."""

from dataclasses import dataclass

import numpy as np

from .tensor import backward, zero_grads


@dataclass
class GradCheckReport:
    max_rel_error: dict  # tensor name -> worst relative error
    tol: float

    @property
    def per_tensor_pass(self):
        return {k: e <= self.tol for k, e in self.max_rel_error.items()}

    @property
    def passed(self):
        return all(self.per_tensor_pass.values())

    @property
    def worst(self):
        return max(self.max_rel_error.values()) if self.max_rel_error else 0.0


def gradient_check(loss_fn, params, h=1e-5, tol=1e-6):
    """Compare analytic gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` must rebuild the graph from the current contents of
    ``params`` (a name -> Tensor mapping) on every call.  Relative error uses
    a max(1, |analytic|, |numeric|) denominator.
    """
    tensors = list(params.values())
    zero_grads(tensors)
    loss = loss_fn()
    backward(loss)
    analytic = {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in params.items()
    }

    errors = {}
    for name, t in params.items():
        worst = 0.0
        flat = t.data.reshape(-1)
        ga = analytic[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = loss_fn().item()
            flat[i] = orig - h
            f_minus = loss_fn().item()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            denom = max(1.0, abs(ga[i]), abs(numeric))
            worst = max(worst, abs(ga[i] - numeric) / denom)
        errors[name] = worst
    return GradCheckReport(max_rel_error=errors, tol=tol)
