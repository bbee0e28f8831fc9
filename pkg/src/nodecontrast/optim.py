"""Adam with bias correction and coupled L2 weight decay."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["AdamState", "adam_step"]


@dataclass(frozen=True)
class AdamState:
    """Per-parameter first/second moment estimates and the step counter."""

    step: int
    first_moment: dict[str, np.ndarray]
    second_moment: dict[str, np.ndarray]
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, params: dict[str, np.ndarray], beta1: float = 0.9, beta2: float = 0.999,
             eps: float = 1e-8) -> "AdamState":
        zeros = {k: np.zeros_like(v, dtype=np.float64) for k, v in params.items()}
        zeros2 = {k: np.zeros_like(v, dtype=np.float64) for k, v in params.items()}
        return cls(0, zeros, zeros2, beta1, beta2, eps)


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
    weight_decay: float = 0.0,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One Adam update; returns fresh parameter and state dicts.

    Weight decay is coupled L2: the decay term is added to the gradient before
    the moment updates.
    """
    if set(params) != set(grads):
        raise ValueError("params and grads must have identical keys")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    new_params: dict[str, np.ndarray] = {}
    new_m: dict[str, np.ndarray] = {}
    new_v: dict[str, np.ndarray] = {}
    for name in params:
        p = np.asarray(params[name], dtype=np.float64)
        g = np.asarray(grads[name], dtype=np.float64)
        if p.shape != g.shape or p.shape != state.first_moment[name].shape:
            raise ValueError(f"shape mismatch for parameter {name!r}")
        if weight_decay:
            g = g + weight_decay * p
        m = b1 * state.first_moment[name] + (1.0 - b1) * g
        v = b2 * state.second_moment[name] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_params[name] = p - lr * m_hat / (np.sqrt(v_hat) + state.eps)
        new_m[name] = m
        new_v[name] = v
    return new_params, AdamState(t, new_m, new_v, b1, b2, state.eps)
