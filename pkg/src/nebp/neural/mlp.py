"""Small numpy MLPs with leaky-ReLU hidden layers and exact reverse-mode gradients."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..types import InputError

OUTPUTS = ("identity", "sigmoid")


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def softplus(x):
    x = np.asarray(x, dtype=float)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


@dataclass
class MLP:
    """Affine layers ``W @ x + b``; leaky ReLU between layers, ``output`` after the last."""

    weights: list
    biases: list
    slope: float = 0.01
    output: str = "identity"

    def __post_init__(self):
        if self.output not in OUTPUTS:
            raise InputError(f"unknown output activation {self.output!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise InputError("need one bias per weight matrix and at least one layer")
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        self.biases = [np.asarray(b, dtype=float).reshape(-1) for b in self.biases]
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise InputError(f"layer {k}: weight {w.shape} and bias {b.shape} disagree")
            if k and w.shape[1] != self.weights[k - 1].shape[0]:
                raise InputError(f"layer {k} input {w.shape[1]} != previous output "
                                 f"{self.weights[k - 1].shape[0]}")

    @classmethod
    def init(cls, sizes, rng: np.random.Generator, output: str = "identity",
             slope: float = 0.01) -> "MLP":
        ws, bs = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            ws.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), (fan_out, fan_in)))
            bs.append(np.zeros(fan_out))
        return cls(ws, bs, slope, output)

    @property
    def sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def params(self) -> list[np.ndarray]:
        """Parameter arrays in a fixed order (W0, b0, W1, b1, ...); views, not copies."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "MLP":
        return MLP([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                   self.slope, self.output)

    def forward(self, x, cache: list | None = None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        h = x[None, :] if single else x
        if h.shape[1] != self.sizes[0]:
            raise InputError(f"input dimension {h.shape[1]} != {self.sizes[0]}")
        last = len(self.weights) - 1
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if cache is not None:
                cache.append(h)
            z = h @ w.T + b
            if k < last:
                h = np.where(z > 0, z, self.slope * z)
            elif self.output == "sigmoid":
                h = sigmoid(z)
            else:
                h = z
        if cache is not None:
            cache.append(h)
        return h[0] if single else h

    def backward(self, cache: list, upstream) -> "MlpGrads":
        """Gradients of ``sum(upstream * output)``, summed over the batch."""
        g = np.asarray(upstream, dtype=float)
        single = g.ndim == 1
        g = g[None, :] if single else g
        out = cache[-1]
        if self.output == "sigmoid":
            g = g * out * (1.0 - out)
        n = len(self.weights)
        dws, dbs = [None] * n, [None] * n
        for k in range(n - 1, -1, -1):
            h_in = cache[k]
            dws[k] = g.T @ h_in
            dbs[k] = g.sum(axis=0)
            g = g @ self.weights[k]
            if k > 0:
                # h_in is the leaky-ReLU output of layer k-1; its sign matches the pre-activation
                g = g * np.where(h_in > 0, 1.0, self.slope)
        return MlpGrads(dws, dbs, g[0] if single else g)


@dataclass
class MlpGrads:
    weights: list
    biases: list
    input: np.ndarray = field(default=None)

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out


def mlp_forward(params: MLP, x) -> np.ndarray:
    return params.forward(x)


def mlp_gradient(params: MLP, x, upstream) -> MlpGrads:
    cache: list = []
    params.forward(x, cache)
    return params.backward(cache, upstream)
