"""Small trainable building blocks shared by the encoders and link scorers."""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .tensor import Tensor, parameter


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int, shape=None) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape if shape is not None else (fan_in, fan_out))


class Linear:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.w = parameter(glorot(rng, in_dim, out_dim))
        self.b = parameter(np.zeros(out_dim))

    def __call__(self, x: Tensor) -> Tensor:
        return T.add(T.matmul(x, self.w), self.b)

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        return {f"{prefix}w": self.w, f"{prefix}b": self.b}


class MLP:
    """Stack of Linear layers with ReLU between them; the last layer is linear."""

    def __init__(self, dims: list[int], rng: np.random.Generator):
        if len(dims) < 2:
            raise ValueError(f"an MLP needs at least input and output dims, got {dims}")
        self.layers = [Linear(a, b, rng) for a, b in zip(dims[:-1], dims[1:])]

    def __call__(self, x: Tensor) -> Tensor:
        for i, layer in enumerate(self.layers):
            x = layer(x)
            if i < len(self.layers) - 1:
                x = T.relu(x)
        return x

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, layer in enumerate(self.layers):
            out.update(layer.parameters(f"{prefix}layer{i}."))
        return out


class LSTMCell:
    """Single LSTM cell; gate order (input, forget, cell, output), forget bias 1."""

    def __init__(self, in_dim: int, hidden: int, rng: np.random.Generator):
        self.hidden = hidden
        self.wx = parameter(glorot(rng, in_dim, 4 * hidden))
        self.wh = parameter(glorot(rng, hidden, 4 * hidden))
        bias = np.zeros(4 * hidden)
        bias[hidden : 2 * hidden] = 1.0
        self.b = parameter(bias)

    def step(self, x: Tensor, h: Tensor, c: Tensor) -> tuple[Tensor, Tensor]:
        gates = T.add(T.add(T.matmul(x, self.wx), T.matmul(h, self.wh)), self.b)
        hid = self.hidden
        i = T.sigmoid(T.slice_cols(gates, 0, hid))
        f = T.sigmoid(T.slice_cols(gates, hid, 2 * hid))
        g = T.tanh(T.slice_cols(gates, 2 * hid, 3 * hid))
        o = T.sigmoid(T.slice_cols(gates, 3 * hid, 4 * hid))
        c_next = T.add(T.mul(f, c), T.mul(i, g))
        h_next = T.mul(o, T.tanh(c_next))
        return h_next, c_next

    def run(self, steps: list[Tensor]) -> Tensor:
        """Run left-to-right from a zero state; returns the final hidden state."""
        batch = steps[0].shape[0]
        h = Tensor(np.zeros((batch, self.hidden)))
        c = Tensor(np.zeros((batch, self.hidden)))
        for x in steps:
            h, c = self.step(x, h, c)
        return h

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        return {f"{prefix}wx": self.wx, f"{prefix}wh": self.wh, f"{prefix}b": self.b}


def sinusoidal_table(max_len: int, dim: int) -> np.ndarray:
    """Classic sin/cos positional table of shape (max_len, dim)."""
    pos = np.arange(max_len)[:, None].astype(np.float64)
    idx = np.arange(dim)[None, :].astype(np.float64)
    angle = pos / np.power(10000.0, 2.0 * np.floor(idx / 2.0) / dim)
    table = np.where(idx % 2 == 0, np.sin(angle), np.cos(angle))
    return table


class TransformerBlock:
    """Pre-activation-free encoder block: masked multi-head attention and a
    ReLU feed-forward, each with a residual connection and layer norm."""

    def __init__(self, dim: int, heads: int, rng: np.random.Generator, ff_mult: int = 2):
        if dim % heads != 0:
            raise ValueError(f"model dim {dim} must be divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.wq = parameter(glorot(rng, dim, dim))
        self.wk = parameter(glorot(rng, dim, dim))
        self.wv = parameter(glorot(rng, dim, dim))
        self.wo = parameter(glorot(rng, dim, dim))
        self.ln1_g = parameter(np.ones(dim))
        self.ln1_b = parameter(np.zeros(dim))
        self.ff1 = Linear(dim, ff_mult * dim, rng)
        self.ff2 = Linear(ff_mult * dim, dim, rng)
        self.ln2_g = parameter(np.ones(dim))
        self.ln2_b = parameter(np.zeros(dim))

    def __call__(self, x: Tensor, valid_mask: np.ndarray | None = None) -> Tensor:
        """x: (batch, length, dim); valid_mask: (batch, length) bools, True = real token."""
        batch, length, dim = x.shape
        dh = dim // self.heads

        def heads_view(t: Tensor) -> Tensor:
            t = T.reshape(t, (batch, length, self.heads, dh))
            return T.transpose(t, (0, 2, 1, 3))  # (B, h, L, dh)

        q = heads_view(T.matmul(x, self.wq))
        k = heads_view(T.matmul(x, self.wk))
        v = heads_view(T.matmul(x, self.wv))
        scores = T.mul(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), 1.0 / np.sqrt(dh))
        if valid_mask is not None:
            bias = np.where(valid_mask, 0.0, -1e30)[:, None, None, :]
            scores = T.add(scores, bias)
        attn = T.softmax(scores)
        mixed = T.matmul(attn, v)  # (B, h, L, dh)
        mixed = T.reshape(T.transpose(mixed, (0, 2, 1, 3)), (batch, length, dim))
        x = T.layer_norm(T.add(x, T.matmul(mixed, self.wo)), self.ln1_g, self.ln1_b)
        ff = self.ff2(T.relu(self.ff1(x)))
        return T.layer_norm(T.add(x, ff), self.ln2_g, self.ln2_b)

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out = {
            f"{prefix}wq": self.wq,
            f"{prefix}wk": self.wk,
            f"{prefix}wv": self.wv,
            f"{prefix}wo": self.wo,
            f"{prefix}ln1_g": self.ln1_g,
            f"{prefix}ln1_b": self.ln1_b,
            f"{prefix}ln2_g": self.ln2_g,
            f"{prefix}ln2_b": self.ln2_b,
        }
        out.update(self.ff1.parameters(f"{prefix}ff1."))
        out.update(self.ff2.parameters(f"{prefix}ff2."))
        return out
