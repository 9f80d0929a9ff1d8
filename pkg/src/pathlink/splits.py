"""Edge splits and negative sampling for link-prediction experiments."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graph import Graph
from .tensor import make_rng


@dataclass(frozen=True)
class LinkSplit:
    """Positive edges per split plus shared evaluation negatives.

    Valid/test positives never enter the message-passing graph; negatives are
    non-edges of the full graph and are shared across all positives of their
    split.
    """

    train_pos: np.ndarray
    valid_pos: np.ndarray
    test_pos: np.ndarray
    ratios: tuple[float, float, float]
    valid_neg: np.ndarray | None = None
    test_neg: np.ndarray | None = None


def make_split(g: Graph, ratios=(0.85, 0.05, 0.10), seed: int = 0) -> LinkSplit:
    """Seeded uniform partition of the edge set into train/valid/test."""
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9 or min(ratios) < 0:
        raise ValueError(f"split ratios must be three nonnegative numbers summing to 1, got {ratios}")
    m = g.num_edges
    n_valid = int(round(ratios[1] * m))
    n_test = int(round(ratios[2] * m))
    n_train = m - n_valid - n_test
    if min(n_train, n_valid, n_test) < 1:
        raise ValueError(
            f"{m} edges are too few for nonempty splits at ratios {ratios} "
            f"(got train/valid/test = {n_train}/{n_valid}/{n_test})"
        )
    perm = make_rng(seed).permutation(m)
    shuffled = g.edges[perm]
    return LinkSplit(
        train_pos=shuffled[:n_train].copy(),
        valid_pos=shuffled[n_train : n_train + n_valid].copy(),
        test_pos=shuffled[n_train + n_valid :].copy(),
        ratios=ratios,
    )


def message_passing_graph(g: Graph, split: LinkSplit, include_valid: bool = False) -> Graph:
    """The graph the encoder is allowed to see: train edges only.

    `include_valid` adds validation edges, the convention some benchmarks use
    at test time; test edges are never included.
    """
    edges = split.train_pos
    if include_valid:
        edges = np.concatenate([split.train_pos, split.valid_pos])
    return Graph.from_edges(g.n, edges, features=g.features)


def sample_negatives(
    g: Graph,
    count: int,
    rng: np.random.Generator | int,
    mode: str = "eval_shared",
) -> np.ndarray:
    """Uniform distinct non-edges of g, as an (count, 2) array with u < v.

    mode is documentation of intent: "eval_shared" lists are sampled once and
    reused for every positive of a split; "train_per_step" lists are drawn
    fresh each time. Both sample from the same distribution.
    """
    if mode not in ("eval_shared", "train_per_step"):
        raise ValueError(f"unknown negative-sampling mode {mode!r}")
    if isinstance(rng, (int, np.integer)):
        rng = make_rng(int(rng))
    total = g.n * (g.n - 1) // 2
    available = total - g.num_edges
    if count > available:
        raise ValueError(
            f"cannot sample {count} negatives: graph has only {available} non-edges"
        )
    edge_set = {(int(u), int(v)) for u, v in g.edges}
    # enumerate when the non-edge pool is small relative to the request
    if count * 3 >= available:
        pool = np.array(
            [(u, v) for u in range(g.n) for v in range(u + 1, g.n) if (u, v) not in edge_set],
            dtype=np.int64,
        )
        pick = rng.choice(len(pool), size=count, replace=False)
        return pool[np.sort(pick)]
    chosen: set[tuple[int, int]] = set()
    out = np.empty((count, 2), dtype=np.int64)
    filled = 0
    while filled < count:
        batch = max(count - filled, 32)
        us = rng.integers(0, g.n, size=2 * batch)
        vs = rng.integers(0, g.n, size=2 * batch)
        for u, v in zip(us, vs):
            if u == v:
                continue
            pair = (int(min(u, v)), int(max(u, v)))
            if pair in edge_set or pair in chosen:
                continue
            chosen.add(pair)
            out[filled] = pair
            filled += 1
            if filled == count:
                break
    return out


def with_shared_negatives(
    g: Graph, split: LinkSplit, count: int, seed: int
) -> LinkSplit:
    """Attach one shared negative list per evaluation split."""
    rng = make_rng(seed)
    valid_rng, test_rng = rng.spawn(2)
    return replace(
        split,
        valid_neg=sample_negatives(g, count, valid_rng, mode="eval_shared"),
        test_neg=sample_negatives(g, count, test_rng, mode="eval_shared"),
    )


def load_negatives(path) -> np.ndarray:
    """Read a shared negative list: one "u v" line per candidate pair."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 'u v', got {line!r}")
            pairs.append((int(parts[0]), int(parts[1])))
    return np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
