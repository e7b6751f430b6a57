"""Bias-corrected Adam, operating on named parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], lr=1e-3, beta1=0.9,
                   beta2=0.999, eps=1e-8) -> "AdamState":
        return cls(
            lr=lr, beta1=beta1, beta2=beta2, eps=eps, step=0,
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
        )


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState):
    """One update; returns (new_params, new_state) without mutating inputs."""
    if set(params) != set(grads):
        raise ParameterError("gradient names do not match parameters")
    t = state.step + 1
    corr1 = 1.0 - state.beta1**t
    corr2 = 1.0 - state.beta2**t
    new_params = {}
    new_m = {}
    new_v = {}
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise ParameterError(f"gradient shape mismatch for {key}")
        m = state.beta1 * state.m[key] + (1.0 - state.beta1) * g
        v = state.beta2 * state.v[key] + (1.0 - state.beta2) * g * g
        update = (m / corr1) / (np.sqrt(v / corr2) + state.eps)
        new_params[key] = p - state.lr * update.astype(p.dtype)
        new_m[key] = m
        new_v[key] = v
    new_state = AdamState(lr=state.lr, beta1=state.beta1, beta2=state.beta2,
                          eps=state.eps, step=t, m=new_m, v=new_v)
    return new_params, new_state
