"""Link scorers over frozen node embeddings.

Five scorer kinds share one interface:

- ``pure_gnn``: MLP on the Hadamard product of the endpoint embeddings.
- ``ncn``: endpoint Hadamard product concatenated with the summed embeddings
  of the common neighbors (zero vector when there are none, which collapses
  it back to the pure-GNN behavior).
- ``sp4lp``: endpoint terms plus a sequence encoding of the node embeddings
  along the canonical shortest path. The path encoding is symmetrized by
  running the sequence model in both directions, so the score cannot depend
  on argument order. Disconnected pairs use the synthetic length-1 path and
  a learned disconnection indicator appended to the path encoding.
- ``ablate_len_only``: endpoint terms plus the raw shortest-path length
  (scalar; -1 marks disconnected pairs), no sequence model.
- ``ablate_seq_only``: the sequence model alone, run over raw node features
  along the path, with no message-passing encoder.

The message-passing pass runs once per call on the whole graph; scoring any
number of pairs then only touches the precomputed path index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import tensor as T
from .encoders import EncoderConfig, build_encoder
from .graph import Graph, common_neighbors
from .nn import MLP, Linear, LSTMCell, TransformerBlock, sinusoidal_table
from .paths import PathIndex, detour_path, shortest_path
from .tensor import Tensor, parameter

SCORERS = ("pure_gnn", "ncn", "sp4lp", "ablate_seq_only", "ablate_len_only")
PHI_KINDS = ("injective_sum", "recurrent", "attention")


@dataclass(frozen=True)
class PhiConfig:
    """Sequence-model choice for encoding a path of node vectors."""

    kind: str = "injective_sum"
    hidden: int = 64
    heads: int = 2  # attention only
    layers: int = 1  # attention only
    max_len: int = 64  # attention positional table size

    def __post_init__(self) -> None:
        if self.kind not in PHI_KINDS:
            raise ValueError(f"phi kind must be one of {PHI_KINDS}, got {self.kind!r}")
        if self.hidden < 1:
            raise ValueError("phi hidden dim must be >= 1")
        if self.kind == "attention" and (self.heads < 1 or self.layers < 1 or self.max_len < 2):
            raise ValueError("attention phi needs heads >= 1, layers >= 1, max_len >= 2")


@dataclass(frozen=True)
class LinkScorerConfig:
    scorer: str = "sp4lp"
    encoder: EncoderConfig | None = None
    phi: PhiConfig | None = None
    rho_hidden: int = 64
    prediction_layers: int = 2

    def __post_init__(self) -> None:
        if self.scorer not in SCORERS:
            raise ValueError(f"scorer must be one of {SCORERS}, got {self.scorer!r}")
        if self.scorer in ("sp4lp", "ablate_seq_only") and self.phi is None:
            raise ValueError(f"scorer {self.scorer!r} requires a phi config")
        if self.scorer in ("pure_gnn", "ncn", "ablate_len_only") and self.phi is not None:
            raise ValueError(f"scorer {self.scorer!r} does not take a phi config")
        if self.scorer == "ablate_seq_only":
            if self.encoder is not None:
                raise ValueError("ablate_seq_only runs on raw features; drop the encoder config")
        elif self.encoder is None:
            raise ValueError(f"scorer {self.scorer!r} requires an encoder config")
        if self.prediction_layers not in (1, 2, 3):
            raise ValueError("prediction_layers must be 1, 2 or 3")


# -- sequence models (phi) -----------------------------------------------------


class InjectiveSumPhi:
    """MLP_out(sum_i MLP_in(h_i)): order-invariant but count-sensitive, so two
    paths differing only in length still map to different encodings."""

    order_invariant = True

    def __init__(self, cfg: PhiConfig, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.mlp_in = MLP([in_dim, cfg.hidden, cfg.hidden], rng)
        self.mlp_out = MLP([cfg.hidden, cfg.hidden, out_dim], rng)

    def encode_sequences(self, seqs: list[np.ndarray], emb: Tensor) -> Tensor:
        flat = np.concatenate(seqs)
        segments = np.repeat(np.arange(len(seqs)), [len(s) for s in seqs])
        h = self.mlp_in(T.slice_rows(emb, flat))
        return self.mlp_out(T.segment_sum(h, segments, len(seqs)))

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out = self.mlp_in.parameters(f"{prefix}mlp_in.")
        out.update(self.mlp_out.parameters(f"{prefix}mlp_out."))
        return out


class RecurrentPhi:
    """One-layer LSTM run left-to-right; the final hidden state is the encoding."""

    order_invariant = False

    def __init__(self, cfg: PhiConfig, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.cell = LSTMCell(in_dim, out_dim, rng)

    def encode_sequences(self, seqs: list[np.ndarray], emb: Tensor) -> Tensor:
        chunks, order = [], []
        for length, (positions, ids) in sorted(_group_by_length(seqs).items()):
            steps = [T.slice_rows(emb, ids[:, t]) for t in range(length)]
            chunks.append(self.cell.run(steps))
            order.extend(positions)
        merged = chunks[0] if len(chunks) == 1 else T.concat(chunks, axis=0)
        return _restore_order(merged, order)

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        return self.cell.parameters(f"{prefix}cell.")


class AttentionPhi:
    """Small transformer encoder with sinusoidal positions, mean-pooled.

    Batches are padded to the longest sequence; a key/query mask keeps padded
    positions out of both the attention and the pooled mean.
    """

    order_invariant = False

    def __init__(self, cfg: PhiConfig, in_dim: int, out_dim: int, rng: np.random.Generator):
        self.max_len = cfg.max_len
        self.in_proj = Linear(in_dim, cfg.hidden, rng)
        self.blocks = [TransformerBlock(cfg.hidden, cfg.heads, rng) for _ in range(cfg.layers)]
        self.out_proj = Linear(cfg.hidden, out_dim, rng)
        self.pos_table = sinusoidal_table(cfg.max_len, cfg.hidden)

    def encode_sequences(self, seqs: list[np.ndarray], emb: Tensor) -> Tensor:
        lengths = np.array([len(s) for s in seqs])
        max_len = int(lengths.max())
        if max_len > self.max_len:
            raise ValueError(
                f"sequence of length {max_len} exceeds the positional table "
                f"({self.max_len}); rebuild the model with a larger phi max_len"
            )
        batch = len(seqs)
        ids = np.zeros((batch, max_len), dtype=np.int64)  # pad with node 0; masked out below
        valid = np.zeros((batch, max_len), dtype=bool)
        for i, s in enumerate(seqs):
            ids[i, : len(s)] = s
            valid[i, : len(s)] = True
        x = self.in_proj(T.slice_rows(emb, ids.ravel()))
        x = T.reshape(x, (batch, max_len, -1))
        x = T.add(x, self.pos_table[:max_len])
        for block in self.blocks:
            x = block(x, valid_mask=valid)
        pooled = T.sum(T.mul(x, valid[:, :, None].astype(np.float64)), axis=1)
        pooled = T.mul(pooled, 1.0 / lengths[:, None])
        return self.out_proj(pooled)

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out = self.in_proj.parameters(f"{prefix}in_proj.")
        for i, block in enumerate(self.blocks):
            out.update(block.parameters(f"{prefix}block{i}."))
        out.update(self.out_proj.parameters(f"{prefix}out_proj."))
        return out


def make_phi(cfg: PhiConfig, in_dim: int, out_dim: int, rng: np.random.Generator):
    cls = {
        "injective_sum": InjectiveSumPhi,
        "recurrent": RecurrentPhi,
        "attention": AttentionPhi,
    }[cfg.kind]
    return cls(cfg, in_dim, out_dim, rng)


def encode_path_phi(phi, sequence: Tensor) -> Tensor:
    """Encode a single (length, dim) sequence of vectors; returns (out_dim,)."""
    ids = np.arange(sequence.shape[0])
    out = phi.encode_sequences([ids], sequence)
    return T.reshape(out, (-1,))


def _group_by_length(seqs: list[np.ndarray]) -> dict[int, tuple[list[int], np.ndarray]]:
    by_len: dict[int, list[int]] = {}
    for i, s in enumerate(seqs):
        by_len.setdefault(len(s), []).append(i)
    return {
        length: (positions, np.stack([seqs[i] for i in positions]))
        for length, positions in by_len.items()
    }


def _restore_order(stacked: Tensor, order: list[int]) -> Tensor:
    perm = np.empty(len(order), dtype=np.int64)
    perm[np.asarray(order)] = np.arange(len(order))
    return T.slice_rows(stacked, perm)


# -- the scorer ------------------------------------------------------------------


class LinkPredictor:
    """Encoder + scorer head for one of the five scorer kinds."""

    def __init__(self, cfg: LinkScorerConfig, in_dim: int, rng: np.random.Generator):
        self.cfg = cfg
        self.in_dim = in_dim
        self.encoder = None
        self.phi = None
        self.syn = None
        if cfg.scorer != "ablate_seq_only":
            self.encoder = build_encoder(cfg.encoder, in_dim, rng)
            d = cfg.encoder.hidden
        if cfg.scorer == "pure_gnn":
            rho_in = d
        elif cfg.scorer == "ncn":
            rho_in = 2 * d
        elif cfg.scorer == "sp4lp":
            self.phi = make_phi(cfg.phi, d, d, rng)
            self.syn = parameter(np.zeros((1, 1)) + 1.0)
            rho_in = 3 * d + 1
        elif cfg.scorer == "ablate_len_only":
            rho_in = 2 * d + 1
        else:  # ablate_seq_only
            self.phi = make_phi(cfg.phi, in_dim, cfg.phi.hidden, rng)
            rho_in = cfg.phi.hidden
        dims = [rho_in] + [cfg.rho_hidden] * (cfg.prediction_layers - 1) + [1]
        self.rho = MLP(dims, rng)

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        if self.encoder is not None:
            out.update(self.encoder.parameters("encoder."))
        if self.phi is not None:
            out.update(self.phi.parameters("phi."))
        if self.syn is not None:
            out["syn_indicator"] = self.syn
        out.update(self.rho.parameters("rho."))
        return out

    def param_list(self) -> list[Tensor]:
        return list(self.parameters().values())

    # -- scoring -----------------------------------------------------------------

    def logits(
        self,
        g: Graph,
        index: PathIndex | None,
        pairs: np.ndarray,
        training: bool = False,
        rng: np.random.Generator | None = None,
        mask_target_edges: bool = False,
    ) -> Tensor:
        """Raw scores for an (m, 2) array of node pairs; shape (m,).

        `mask_target_edges` reroutes the path feature of pairs that are
        themselves edges of g through a detour, so training positives see the
        same path distribution as held-out pairs instead of their own edge.
        """
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        if (pairs[:, 0] == pairs[:, 1]).any():
            raise ValueError("link scoring requires distinct endpoints")
        kind = self.cfg.scorer
        if kind == "ablate_seq_only":
            feats = self._seq_only_features(g, index, pairs, mask_target_edges)
        else:
            emb = self.encoder(g, training=training, rng=rng)
            xu = T.slice_rows(emb, pairs[:, 0])
            xv = T.slice_rows(emb, pairs[:, 1])
            if kind == "pure_gnn":
                feats = T.mul(xu, xv)
            elif kind == "ncn":
                feats = T.concat([T.mul(xu, xv), self._cn_sum(g, emb, pairs)], axis=-1)
            elif kind == "sp4lp":
                h_path = self._path_encoding(g, index, pairs, emb, mask_target_edges)
                feats = T.concat([T.add(xu, xv), T.mul(xu, xv), h_path], axis=-1)
            else:  # ablate_len_only
                lengths = self._path_lengths(g, index, pairs, mask_target_edges)
                feats = T.concat([T.add(xu, xv), T.mul(xu, xv), Tensor(lengths[:, None])], axis=-1)
        return T.reshape(self.rho(feats), (-1,))

    def score(self, g: Graph, index: PathIndex | None, u: int, v: int) -> float:
        """Single-pair convenience wrapper (no gradient recording)."""
        return float(self.logits(g, index, np.array([[u, v]])).data[0])

    # -- feature pieces ------------------------------------------------------------

    def _cn_sum(self, g: Graph, emb: Tensor, pairs: np.ndarray) -> Tensor:
        ids, segments = [], []
        for i, (u, v) in enumerate(pairs):
            cn = common_neighbors(g, int(u), int(v))
            ids.append(cn)
            segments.append(np.full(len(cn), i))
        flat = np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64)
        seg = np.concatenate(segments) if segments else np.zeros(0, dtype=np.int64)
        if flat.size == 0:
            return Tensor(np.zeros((len(pairs), emb.shape[1])))
        return T.segment_sum(T.slice_rows(emb, flat), seg, len(pairs))

    def _paths(self, g: Graph, index: PathIndex, pairs: np.ndarray, mask_target_edges: bool):
        if index is None:
            raise ValueError(f"scorer {self.cfg.scorer!r} needs a path index")
        fetch = detour_path if mask_target_edges else shortest_path
        seqs, flags = [], np.zeros(len(pairs))
        for i, (u, v) in enumerate(pairs):
            p = fetch(index, g, int(u), int(v))
            seqs.append(np.asarray(p.nodes, dtype=np.int64))
            flags[i] = 1.0 if p.synthetic else 0.0
        return seqs, flags

    def _symmetrized_phi(self, seqs: list[np.ndarray], emb: Tensor) -> Tensor:
        forward = self.phi.encode_sequences(seqs, emb)
        if self.phi.order_invariant:
            return T.mul(forward, 2.0)
        backward = self.phi.encode_sequences([s[::-1] for s in seqs], emb)
        return T.add(forward, backward)

    def _path_encoding(self, g, index, pairs, emb: Tensor, mask_target_edges: bool) -> Tensor:
        seqs, flags = self._paths(g, index, pairs, mask_target_edges)
        h = self._symmetrized_phi(seqs, emb)
        syn_col = T.mul(Tensor(flags[:, None]), self.syn)
        return T.concat([h, syn_col], axis=-1)

    def _path_lengths(self, g, index, pairs, mask_target_edges: bool) -> np.ndarray:
        seqs, flags = self._paths(g, index, pairs, mask_target_edges)
        # -1 marks disconnected pairs so a synthetic pair cannot alias length 1
        return np.where(flags > 0, -1.0, np.array([len(s) - 1 for s in seqs], dtype=np.float64))

    def _seq_only_features(self, g, index, pairs, mask_target_edges: bool) -> Tensor:
        seqs, _ = self._paths(g, index, pairs, mask_target_edges)
        return self._symmetrized_phi(seqs, Tensor(g.features))


def build_model(cfg: LinkScorerConfig, in_dim: int, rng: np.random.Generator) -> LinkPredictor:
    return LinkPredictor(cfg, in_dim, rng)
