"""Dense float64 tensors with a reverse-mode gradient tape, plus Adam.

Design: eager ops record (inputs, output, backward rule) onto the innermost
active Tape; execution order is the topological order, and backward() walks
the entries in exact reverse. There is no graph optimization — at desk scale
correctness and debuggability win, and float64 keeps finite-difference checks
tight.

Every op validates its output for NaN/Inf (toggle with CHECK_FINITE); no op
ever mutates an input buffer. All randomness (dropout, init) flows through
explicitly passed numpy Generators built on the counter-based Philox stream,
see make_rng / split_rng.
"""

from __future__ import annotations

from dataclasses import dataclass, field as _dc_field

import numpy as np

CHECK_FINITE: bool = True


class NonFiniteError(FloatingPointError):
    """An op produced NaN or Inf while CHECK_FINITE was enabled."""


class Tensor:
    """A row-major float64 array, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad", "grad", "_tape", "_op_output")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._tape: "Tape | None" = None
        self._op_output = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        flag = ", grad" if self.requires_grad else ""
        return f"Tensor(shape={self.data.shape}{flag})"

    # light operator sugar; the op functions below do the real work
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)


def parameter(data) -> Tensor:
    """A trainable leaf: requires_grad with a zero-initialized grad buffer."""
    t = Tensor(np.array(data, dtype=np.float64, copy=True), requires_grad=True)
    t.grad = np.zeros_like(t.data)
    return t


class Tape:
    """Records ops in execution order; context manager activates recording."""

    _stack: list["Tape"] = []

    def __init__(self):
        self._entries: list[tuple[tuple[Tensor, ...], Tensor, object]] = []

    def __enter__(self) -> "Tape":
        Tape._stack.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        Tape._stack.pop()

    def __len__(self) -> int:
        return len(self._entries)

    @classmethod
    def current(cls) -> "Tape | None":
        return cls._stack[-1] if cls._stack else None


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def apply_op(out_data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn, name: str = "op") -> Tensor:
    """Wrap a computed array as an op output, recording the backward rule.

    backward_fn(grad_out) must return one gradient array (or None) per input.
    This is the extension point for custom ops defined outside this module.
    """
    if CHECK_FINITE and not np.isfinite(out_data).all():
        raise NonFiniteError(f"{name} produced a non-finite value")
    out = Tensor(out_data)
    out._op_output = True
    tape = Tape.current()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out._tape = tape
        tape._entries.append((inputs, out, backward_fn))
    return out


def backward(loss: Tensor) -> None:
    """Accumulate dLoss/dLeaf into every requires_grad leaf; clears the tape."""
    if loss.data.ndim != 0:
        raise ValueError(f"backward needs a scalar loss, got shape {loss.data.shape}")
    tape = loss._tape
    if tape is None or not tape._entries:
        raise ValueError("loss is not attached to a non-empty tape")
    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for inputs, out, fn in reversed(tape._entries):
        gout = grads.pop(id(out), None)
        if gout is None:
            continue  # this op's output never reached the loss
        for t, g in zip(inputs, fn(gout)):
            if g is None or not t.requires_grad:
                continue
            if t._op_output:
                acc = grads.get(id(t))
                grads[id(t)] = g if acc is None else acc + g
            else:
                if t.grad is None:
                    t.grad = np.zeros_like(t.data)
                t.grad += g
    tape._entries.clear()


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum g down to `shape`, undoing numpy broadcasting."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, size in enumerate(shape):
        if size == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


# -- elementwise and linear ops ------------------------------------------------


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data + b.data

    def backward_fn(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(g, b.data.shape)

    return apply_op(out, (a, b), backward_fn, "add")


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data - b.data

    def backward_fn(g):
        return _unbroadcast(g, a.data.shape), _unbroadcast(-g, b.data.shape)

    return apply_op(out, (a, b), backward_fn, "sub")


def neg(a) -> Tensor:
    a = _as_tensor(a)
    return apply_op(-a.data, (a,), lambda g: (-g,), "neg")


def mul(a, b) -> Tensor:
    """Elementwise product with numpy broadcasting."""
    a, b = _as_tensor(a), _as_tensor(b)
    out = a.data * b.data

    def backward_fn(g):
        return (
            _unbroadcast(g * b.data, a.data.shape),
            _unbroadcast(g * a.data, b.data.shape),
        )

    return apply_op(out, (a, b), backward_fn, "mul")


def matmul(a, b) -> Tensor:
    """Matrix product; leading dims broadcast like numpy matmul."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(
            f"matmul needs >= 2-D operands, got shapes {a.data.shape} and {b.data.shape}"
        )
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.data.shape} @ {b.data.shape}")
    out = a.data @ b.data

    def backward_fn(g):
        ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.data.shape)
        gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.data.shape)
        return ga, gb

    return apply_op(out, (a, b), backward_fn, "matmul")


def relu(x) -> Tensor:
    x = _as_tensor(x)
    out = np.maximum(x.data, 0.0)
    return apply_op(out, (x,), lambda g: (g * (x.data > 0),), "relu")


def sigmoid(x) -> Tensor:
    x = _as_tensor(x)
    out = _sigmoid(x.data)
    return apply_op(out, (x,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # evaluated piecewise to avoid overflowing exp
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def tanh(x) -> Tensor:
    x = _as_tensor(x)
    out = np.tanh(x.data)
    return apply_op(out, (x,), lambda g: (g * (1.0 - out * out),), "tanh")


def softmax(x) -> Tensor:
    """Softmax over the last axis."""
    x = _as_tensor(x)
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=-1, keepdims=True)

    def backward_fn(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - dot),)

    return apply_op(out, (x,), backward_fn, "softmax")


# -- shape ops -----------------------------------------------------------------


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = tuple(_as_tensor(t) for t in tensors)
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward_fn(g):
        return tuple(np.split(g, splits, axis=axis))

    return apply_op(out, tensors, backward_fn, "concat")


def slice_rows(x, rows) -> Tensor:
    """Gather rows (axis 0); repeated rows accumulate gradient."""
    x = _as_tensor(x)
    rows = np.asarray(rows, dtype=np.int64)
    out = x.data[rows]

    def backward_fn(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, rows, g)
        return (gx,)

    return apply_op(out, (x,), backward_fn, "slice_rows")


def embedding_lookup(table, ids) -> Tensor:
    """Row lookup into an embedding table; alias of slice_rows."""
    return slice_rows(table, ids)


def slice_cols(x, start: int, stop: int) -> Tensor:
    """Slice the last axis to [start, stop)."""
    x = _as_tensor(x)
    out = x.data[..., start:stop].copy()

    def backward_fn(g):
        gx = np.zeros_like(x.data)
        gx[..., start:stop] = g
        return (gx,)

    return apply_op(out, (x,), backward_fn, "slice_cols")


def reshape(x, shape) -> Tensor:
    x = _as_tensor(x)
    out = x.data.reshape(shape)
    return apply_op(out, (x,), lambda g: (g.reshape(x.data.shape),), "reshape")


def transpose(x, axes) -> Tensor:
    x = _as_tensor(x)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    out = x.data.transpose(axes)
    return apply_op(out, (x,), lambda g: (g.transpose(inverse),), "transpose")


# -- reductions ------------------------------------------------------------------


def sum(x, axis: int | None = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    x = _as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.data.shape).copy(),)

    return apply_op(out, (x,), backward_fn, "sum")


def mean(x, axis: int | None = None, keepdims: bool = False) -> Tensor:
    x = _as_tensor(x)
    out = x.data.mean(axis=axis, keepdims=keepdims)
    count = x.data.size if axis is None else x.data.shape[axis]

    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.data.shape).copy() / count,)

    return apply_op(out, (x,), backward_fn, "mean")


def segment_sum(x, segment_ids, num_segments: int) -> Tensor:
    """out[s] = sum of rows of x whose segment id is s; empty segments are zero."""
    x = _as_tensor(x)
    seg = np.asarray(segment_ids, dtype=np.int64)
    out = np.zeros((num_segments,) + x.data.shape[1:], dtype=np.float64)
    np.add.at(out, seg, x.data)

    def backward_fn(g):
        return (g[seg],)

    return apply_op(out, (x,), backward_fn, "segment_sum")


# -- stochastic / composite ops ---------------------------------------------------


def dropout(x, p: float, training: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: scales by 1/(1-p) at train time, identity at eval."""
    x = _as_tensor(x)
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout p must be in [0, 1), got {p}")
    if not training or p == 0.0:
        return apply_op(x.data.copy(), (x,), lambda g: (g,), "dropout")
    if rng is None:
        raise ValueError("dropout at train time needs an explicit rng stream")
    keep = (rng.random(x.data.shape) >= p) / (1.0 - p)
    return apply_op(x.data * keep, (x,), lambda g: (g * keep,), "dropout")


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale and shift."""
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gamma.data + beta.data
    lead_axes = tuple(range(x.data.ndim - 1))

    def backward_fn(g):
        dxhat = g * gamma.data
        dx = inv * (
            dxhat
            - dxhat.mean(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
        )
        dgamma = (g * xhat).sum(axis=lead_axes) if lead_axes else g * xhat
        dbeta = g.sum(axis=lead_axes) if lead_axes else g
        return dx, dgamma.reshape(gamma.data.shape), dbeta.reshape(beta.data.shape)

    return apply_op(out, (x, gamma, beta), backward_fn, "layer_norm")


def bce_with_logits(logits, targets) -> Tensor:
    """Mean binary cross-entropy on raw logits, evaluated in stable form."""
    logits = _as_tensor(logits)
    targets = np.asarray(_as_tensor(targets).data, dtype=np.float64)
    x = logits.data
    loss = np.maximum(x, 0.0) - x * targets + np.log1p(np.exp(-np.abs(x)))
    out = np.asarray(loss.mean())

    def backward_fn(g):
        return (g * (_sigmoid(x) - targets) / x.size, None)

    return apply_op(out, (logits, Tensor(targets)), backward_fn, "bce_with_logits")


# -- optimizer --------------------------------------------------------------------


@dataclass
class AdamState:
    """Adam moments plus hyperparameters; weight decay is decoupled."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    step: int = 0
    m: list = _dc_field(default_factory=list)
    v: list = _dc_field(default_factory=list)


def adam_init(
    params,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> AdamState:
    state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps, weight_decay=weight_decay)
    state.m = [np.zeros_like(p.data) for p in params]
    state.v = [np.zeros_like(p.data) for p in params]
    return state


def adam_step(state: AdamState, params) -> None:
    """One bias-corrected Adam update; params must match the init order. Zeroes grads."""
    params = list(params)
    if len(params) != len(state.m):
        raise ValueError(f"got {len(params)} params for a state of {len(state.m)}")
    state.step += 1
    t = state.step
    for i, p in enumerate(params):
        if p.grad is None:
            raise ValueError(f"parameter {i} has no gradient; run backward first")
        g = p.grad
        if state.weight_decay:
            p.data -= state.lr * state.weight_decay * p.data
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g
        m_hat = state.m[i] / (1.0 - state.beta1**t)
        v_hat = state.v[i] / (1.0 - state.beta2**t)
        p.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
        p.grad = np.zeros_like(p.data)


def zero_grads(params) -> None:
    for p in params:
        p.grad = np.zeros_like(p.data)


# -- randomness -------------------------------------------------------------------


def make_rng(seed: int) -> np.random.Generator:
    """Root random stream: counter-based Philox keyed by the run seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def split_rng(rng: np.random.Generator, k: int) -> list[np.random.Generator]:
    """k independent child streams; never reuse the parent afterwards for the same purpose."""
    return rng.spawn(k)
