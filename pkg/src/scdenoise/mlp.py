"""Minimal fully-connected network with hand-written reverse-mode gradients and Adam.

Kept deliberately small: tanh hidden layers, linear output, float64 throughout.
Both the score network and the semantic decoder build on this.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Mlp", "AdamState", "adam_step"]


class Mlp:
    """Tanh MLP. Parameters live in self.weights / self.biases (lists of arrays)."""

    def __init__(self, layer_sizes, rng: np.random.Generator | None = None):
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output layers")
        self.layer_sizes = [int(s) for s in layer_sizes]
        self.weights = []
        self.biases = []
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            if rng is None:
                w = np.zeros((n_in, n_out))
            else:
                w = rng.standard_normal((n_in, n_out)) / np.sqrt(n_in)
            self.weights.append(w)
            self.biases.append(np.zeros(n_out))

    @property
    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def set_params(self, params) -> None:
        n = len(self.weights)
        for i, p in enumerate(params[:n]):
            self.weights[i] = np.asarray(p, dtype=float)
        for i, p in enumerate(params[n:]):
            self.biases[i] = np.asarray(p, dtype=float)

    def forward(self, x: np.ndarray):
        """Returns (output, cache). x has shape (batch, n_in)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        acts = [x]
        h = x
        n_layers = len(self.weights)
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w + b
            if l < n_layers - 1:
                h = np.tanh(h)
            acts.append(h)
        return h, acts

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def backward(self, cache, grad_out: np.ndarray):
        """Backpropagate d(loss)/d(output) through the cached forward pass.

        Returns (grads, grad_x) with grads ordered like self.params.
        """
        acts = cache
        n_layers = len(self.weights)
        gw = [None] * n_layers
        gb = [None] * n_layers
        delta = np.atleast_2d(np.asarray(grad_out, dtype=float))
        for l in range(n_layers - 1, -1, -1):
            if l < n_layers - 1:
                # undo the tanh: acts[l+1] is the post-activation value
                delta = delta * (1.0 - acts[l + 1] ** 2)
            gw[l] = acts[l].T @ delta
            gb[l] = delta.sum(axis=0)
            delta = delta @ self.weights[l].T
        return gw + gb, delta

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params)


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    t: int = 0

    @classmethod
    def for_params(cls, params) -> "AdamState":
        return cls(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            t=0,
        )


def adam_step(
    params,
    grads,
    state: AdamState,
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
):
    """One standard Adam update with bias correction; mutates params and state."""
    if len(params) != len(grads):
        raise ValueError("parameter/gradient count mismatch")
    b1, b2 = betas
    state.t += 1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != np.shape(g):
            raise ValueError("parameter/gradient shape mismatch")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g**2
        mhat = m / (1.0 - b1**state.t)
        vhat = v / (1.0 - b2**state.t)
        p -= lr * mhat / (np.sqrt(vhat) + eps)
    return params, state
