"""Adam optimizer with global-norm gradient clipping."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def clone(self) -> "AdamState":
        return AdamState({k: v.copy() for k, v in self.m.items()},
                         {k: v.copy() for k, v in self.v.items()},
                         self.t, self.beta1, self.beta2, self.eps)


def init_adam(params: dict, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    return AdamState(
        m={key: np.zeros_like(value) for key, value in params.items()},
        v={key: np.zeros_like(value) for key, value in params.items()},
        t=0, beta1=beta1, beta2=beta2, eps=eps,
    )


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> dict:
    """Bias-corrected moment update, applied in place; returns the params dict."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1 ** state.t
    correction2 = 1.0 - b2 ** state.t
    for key, grad in grads.items():
        state.m[key] = b1 * state.m[key] + (1.0 - b1) * grad
        state.v[key] = b2 * state.v[key] + (1.0 - b2) * grad * grad
        m_hat = state.m[key] / correction1
        v_hat = state.v[key] / correction2
        params[key] -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def clip_global_norm(grads: dict, max_norm: float = 5.0) -> float:
    """Scale all gradients so their joint L2 norm is at most max_norm; returns the raw norm."""
    total = 0.0
    for grad in grads.values():
        total += float(np.sum(grad * grad))
    norm = float(np.sqrt(total))
    if norm > max_norm and norm > 0.0:
        scale = max_norm / norm
        for key in grads:
            grads[key] *= scale
    return norm


def clone_params(params: dict) -> dict:
    return {key: value.copy() for key, value in params.items()}
