"""Message-passing node encoders: GCN and GraphSAGE stacks.

Propagation runs as a dense masked matmul for small graphs and switches to
CSR gather-scatter above DENSE_NODE_LIMIT; the two paths are numerically
interchangeable and both are kept under test. The adjacency is symmetric, so
the CSR neighbor-sum op is its own backward rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .graph import Graph
from .nn import glorot
from .tensor import Tensor, apply_op, parameter

ENCODER_KINDS = ("gcn", "sage")

DENSE_NODE_LIMIT = 512


@dataclass(frozen=True)
class EncoderConfig:
    kind: str = "gcn"
    layers: int = 2
    hidden: int = 64
    dropout: float = 0.0
    activation: str = "relu"

    def __post_init__(self) -> None:
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"encoder kind must be one of {ENCODER_KINDS}, got {self.kind!r}")
        if self.layers < 1:
            raise ValueError("encoder needs at least one layer")
        if self.hidden < 1:
            raise ValueError("hidden dim must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.activation != "relu":
            raise ValueError(f"unsupported activation {self.activation!r}")


@dataclass(frozen=True)
class NodeEmbeddings:
    """Final-layer node representations plus the config that produced them."""

    values: Tensor
    config: EncoderConfig


def neighbor_sum_op(g: Graph, x: Tensor) -> Tensor:
    """Autodiff wrapper around Graph.neighbor_sum; symmetric, so d/dx is itself."""
    out = g.neighbor_sum(x.data)
    return apply_op(out, (x,), lambda grad: (g.neighbor_sum(grad),), "neighbor_sum")


class _EncoderBase:
    def __init__(self, cfg: EncoderConfig, in_dim: int):
        self.cfg = cfg
        self.in_dim = in_dim
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"{prefix}layer{i}.w"] = w
            out[f"{prefix}layer{i}.b"] = b
        return out

    def __call__(
        self,
        g: Graph,
        training: bool = False,
        rng: np.random.Generator | None = None,
        force_path: str | None = None,
    ) -> Tensor:
        """Embed all nodes: (n, hidden). force_path picks "dense" or "csr" explicitly."""
        if g.n == 0:
            raise ValueError("cannot encode an empty graph")
        if g.feature_dim != self.in_dim:
            raise ValueError(
                f"graph features have dim {g.feature_dim}, encoder expects {self.in_dim}"
            )
        dense = g.n <= DENSE_NODE_LIMIT if force_path is None else force_path == "dense"
        h = Tensor(g.features)
        for i in range(self.cfg.layers):
            h = self._layer(g, h, i, dense)
            if i < self.cfg.layers - 1:
                h = T.relu(h)
                if self.cfg.dropout > 0.0:
                    h = T.dropout(h, self.cfg.dropout, training, rng)
        return h

    def _layer(self, g: Graph, h: Tensor, i: int, dense: bool) -> Tensor:
        raise NotImplementedError


class GCNEncoder(_EncoderBase):
    """H <- act(D^{-1/2} (A + I) D^{-1/2} H W) with self-loop-augmented degrees."""

    def __init__(self, cfg: EncoderConfig, in_dim: int, rng: np.random.Generator):
        super().__init__(cfg, in_dim)
        dims = [in_dim] + [cfg.hidden] * cfg.layers
        for a, b in zip(dims[:-1], dims[1:]):
            self.weights.append(parameter(glorot(rng, a, b)))
            self.biases.append(parameter(np.zeros(b)))

    def _layer(self, g: Graph, h: Tensor, i: int, dense: bool) -> Tensor:
        z = T.matmul(h, self.weights[i])
        z = self._propagate(g, z, dense)
        return T.add(z, self.biases[i])

    @staticmethod
    def _propagate(g: Graph, h: Tensor, dense: bool) -> Tensor:
        inv_sqrt = 1.0 / np.sqrt(g.degrees + 1.0)
        if dense:
            s = g.dense_adjacency()
            np.fill_diagonal(s, 1.0)
            s *= inv_sqrt[:, None]
            s *= inv_sqrt[None, :]
            return T.matmul(Tensor(s), h)
        scaled = T.mul(h, inv_sqrt[:, None])
        agg = T.add(neighbor_sum_op(g, scaled), scaled)
        return T.mul(agg, inv_sqrt[:, None])


class SAGEEncoder(_EncoderBase):
    """H <- act(concat(H, mean over neighbors of H) W); isolated nodes get a zero mean."""

    def __init__(self, cfg: EncoderConfig, in_dim: int, rng: np.random.Generator):
        super().__init__(cfg, in_dim)
        dims = [in_dim] + [cfg.hidden] * cfg.layers
        for a, b in zip(dims[:-1], dims[1:]):
            self.weights.append(parameter(glorot(rng, 2 * a, b)))
            self.biases.append(parameter(np.zeros(b)))

    def _layer(self, g: Graph, h: Tensor, i: int, dense: bool) -> Tensor:
        mean_nbr = self._mean_neighbors(g, h, dense)
        z = T.matmul(T.concat([h, mean_nbr], axis=-1), self.weights[i])
        return T.add(z, self.biases[i])

    @staticmethod
    def _mean_neighbors(g: Graph, h: Tensor, dense: bool) -> Tensor:
        inv_deg = 1.0 / np.maximum(g.degrees, 1)
        if dense:
            a = g.dense_adjacency()
            a *= inv_deg[:, None]
            return T.matmul(Tensor(a), h)
        return T.mul(neighbor_sum_op(g, h), inv_deg[:, None])


def build_encoder(cfg: EncoderConfig, in_dim: int, rng: np.random.Generator):
    cls = {"gcn": GCNEncoder, "sage": SAGEEncoder}[cfg.kind]
    return cls(cfg, in_dim, rng)


def encode(
    g: Graph,
    encoder,
    training: bool = False,
    rng: np.random.Generator | None = None,
) -> NodeEmbeddings:
    """Convenience wrapper returning embeddings tagged with their config."""
    return NodeEmbeddings(values=encoder(g, training=training, rng=rng), config=encoder.cfg)
