"""Dense MLP with hand-derived backward pass (float64 numpy)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ACTS = {
    "linear": (lambda z: z, lambda z, a: np.ones_like(z)),
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "sigmoid": (lambda z: 1.0 / (1.0 + np.exp(-z)), lambda z, a: a * (1.0 - a)),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0.0).astype(float)),
}


@dataclass
class MlpParams:
    weights: list  # per layer (fan_in, fan_out)
    biases: list   # per layer (fan_out,)
    activations: list

    def param_list(self) -> list:
        return list(self.weights) + list(self.biases)

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases],
                         list(self.activations))

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]


def init_mlp(sizes: list[int], activations: list[str], rng: np.random.Generator) -> MlpParams:
    """Xavier-uniform initialization; `sizes` includes input and output dims."""
    if len(activations) != len(sizes) - 1:
        raise ValueError("need one activation per layer")
    for a in activations:
        if a not in _ACTS:
            raise ValueError(f"unknown activation {a!r}")
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases, list(activations))


def mlp_forward(params: MlpParams, x: np.ndarray):
    """Returns (output, cache); accepts (in,) or (batch, in) inputs."""
    x = np.asarray(x, dtype=float)
    squeeze = x.ndim == 1
    a = x[None, :] if squeeze else x
    cache = {"inputs": [], "pre": [], "post": [], "squeeze": squeeze}
    for w, b, act in zip(params.weights, params.biases, params.activations):
        cache["inputs"].append(a)
        z = a @ w + b
        a = _ACTS[act][0](z)
        cache["pre"].append(z)
        cache["post"].append(a)
    return (a[0] if squeeze else a), cache


def mlp_backward(params: MlpParams, cache, grad_out: np.ndarray):
    """Backprop `grad_out` (d loss / d output); returns (grads, grad_input).

    grads has the same list structure as `param_list()`: weights then biases.
    Gradients are summed over the batch dimension.
    """
    g = np.asarray(grad_out, dtype=float)
    if cache["squeeze"]:
        g = g[None, :]
    d_w = [None] * len(params.weights)
    d_b = [None] * len(params.biases)
    for layer in range(len(params.weights) - 1, -1, -1):
        act = params.activations[layer]
        z, a = cache["pre"][layer], cache["post"][layer]
        g = g * _ACTS[act][1](z, a)
        d_w[layer] = cache["inputs"][layer].T @ g
        d_b[layer] = g.sum(axis=0)
        g = g @ params.weights[layer].T
    grad_input = g[0] if cache["squeeze"] else g
    return d_w + d_b, grad_input
