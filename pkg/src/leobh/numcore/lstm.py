"""Single-layer LSTM cell with linear output head, forward and BPTT backward.

Gate equations (vectors; (x) is the Hadamard product):

    f = sigmoid(x W_f + h U_f + b_f)
    i = sigmoid(x W_i + h U_i + b_i)
    g = tanh   (x W_c + h U_c + b_c)
    c = f (x) c_prev + i (x) g
    o = sigmoid(x W_o + h U_o + b_o)
    h = o (x) tanh(c)
    y = h W_h + b_h
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GATES = ("f", "i", "c", "o")


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass
class LstmParams:
    w: dict    # gate -> (in_dim, H)
    u: dict    # gate -> (H, H)
    b: dict    # gate -> (H,)
    w_h: np.ndarray  # (H, out_dim)
    b_h: np.ndarray  # (out_dim,)

    @property
    def hidden(self) -> int:
        return self.w["f"].shape[1]

    @property
    def in_dim(self) -> int:
        return self.w["f"].shape[0]

    def param_list(self) -> list:
        return ([self.w[g] for g in GATES] + [self.u[g] for g in GATES]
                + [self.b[g] for g in GATES] + [self.w_h, self.b_h])

    def copy(self) -> "LstmParams":
        return LstmParams({g: self.w[g].copy() for g in GATES},
                          {g: self.u[g].copy() for g in GATES},
                          {g: self.b[g].copy() for g in GATES},
                          self.w_h.copy(), self.b_h.copy())


def init_lstm(in_dim: int, hidden: int, out_dim: int,
              rng: np.random.Generator) -> LstmParams:
    def mat(fan_in, fan_out):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_in, fan_out))

    w = {g: mat(in_dim, hidden) for g in GATES}
    u = {g: mat(hidden, hidden) for g in GATES}
    b = {g: np.zeros(hidden) for g in GATES}
    b["f"] += 1.0  # forget-gate bias keeps early memory open
    return LstmParams(w, u, b, mat(hidden, out_dim), np.zeros(out_dim))


def lstm_step(params: LstmParams, x: np.ndarray, h_prev: np.ndarray,
              c_prev: np.ndarray):
    """One cell update; returns (h, c, y, cache)."""
    x = np.asarray(x, dtype=float)
    pre = {g: x @ params.w[g] + h_prev @ params.u[g] + params.b[g] for g in GATES}
    f, i, o = _sigmoid(pre["f"]), _sigmoid(pre["i"]), _sigmoid(pre["o"])
    g = np.tanh(pre["c"])
    c = f * c_prev + i * g
    tanh_c = np.tanh(c)
    h = o * tanh_c
    y = h @ params.w_h + params.b_h
    cache = {"x": x, "h_prev": h_prev, "c_prev": c_prev, "f": f, "i": i, "o": o,
             "g": g, "c": c, "tanh_c": tanh_c, "h": h}
    return h, c, y, cache


def zero_like_grads(params: LstmParams) -> list:
    return [np.zeros_like(p) for p in params.param_list()]


def lstm_step_backward(params: LstmParams, cache, d_y, d_h_next, d_c_next, grads: list):
    """Backward through one step.

    d_y: gradient on the output head; d_h_next / d_c_next: gradients flowing
    back from the following step.  Accumulates into `grads` (layout of
    `param_list()`); returns (d_x, d_h_prev, d_c_prev).
    """
    f, i, o, g = cache["f"], cache["i"], cache["o"], cache["g"]
    tanh_c = cache["tanh_c"]

    d_wh = np.outer(cache["h"], d_y) if d_y.ndim == 1 else cache["h"].T @ d_y
    grads[12] += d_wh
    grads[13] += d_y if d_y.ndim == 1 else d_y.sum(axis=0)
    d_h = d_h_next + d_y @ params.w_h.T

    d_o = d_h * tanh_c * o * (1.0 - o)
    d_c = d_h * o * (1.0 - tanh_c ** 2) + d_c_next
    d_f = d_c * cache["c_prev"] * f * (1.0 - f)
    d_i = d_c * g * i * (1.0 - i)
    d_g = d_c * i * (1.0 - g ** 2)
    d_c_prev = d_c * f

    d_pre = {"f": d_f, "i": d_i, "c": d_g, "o": d_o}
    d_x = np.zeros_like(cache["x"])
    d_h_prev = np.zeros_like(d_h)
    for idx, gate in enumerate(GATES):
        dp = d_pre[gate]
        grads[idx] += np.outer(cache["x"], dp)
        grads[4 + idx] += np.outer(cache["h_prev"], dp)
        grads[8 + idx] += dp
        d_x += dp @ params.w[gate].T
        d_h_prev += dp @ params.u[gate].T
    return d_x, d_h_prev, d_c_prev


def lstm_forward_seq(params: LstmParams, xs: np.ndarray, h0=None, c0=None):
    """Run a sequence (T, in_dim); returns (ys, caches, h_T, c_T)."""
    h = np.zeros(params.hidden) if h0 is None else h0
    c = np.zeros(params.hidden) if c0 is None else c0
    ys, caches = [], []
    for x in xs:
        h, c, y, cache = lstm_step(params, x, h, c)
        ys.append(y)
        caches.append(cache)
    return np.asarray(ys), caches, h, c


def lstm_backward_seq(params: LstmParams, caches, d_ys: np.ndarray) -> list:
    """BPTT over a window; returns summed parameter gradients."""
    grads = zero_like_grads(params)
    d_h = np.zeros(params.hidden)
    d_c = np.zeros(params.hidden)
    for t in range(len(caches) - 1, -1, -1):
        _, d_h, d_c = lstm_step_backward(params, caches[t], d_ys[t], d_h, d_c, grads)
    return grads
