"""Bias-corrected Adam over lists of parameter arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list, lr: float, **kw) -> "AdamState":
        state = cls(lr=lr, **kw)
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
        return state


def adam_step(params: list, grads: list, state: AdamState,
              maximize: bool = False) -> None:
    """One Adam update, in place on `params` (descent unless `maximize`)."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params/grads/state length mismatch")
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    sign = -1.0 if maximize else 1.0
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = sign * np.asarray(g, dtype=float)
        if not np.isfinite(g).all():
            raise FloatingPointError("non-finite gradient in adam_step")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        if not np.isfinite(p).all():
            raise FloatingPointError("non-finite parameter after adam_step")
