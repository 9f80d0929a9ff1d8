"""Small deterministic graph constructors used by demos, checks and tests."""

from __future__ import annotations

import numpy as np

from .graph import Graph
from .tensor import make_rng


def cycle(n: int, features: np.ndarray | None = None) -> Graph:
    edges = [(i, (i + 1) % n) for i in range(n)]
    return Graph.from_edges(n, edges, features=features)


def path_graph(n: int, features: np.ndarray | None = None) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)], features=features)


def complete(n: int, features: np.ndarray | None = None) -> Graph:
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return Graph.from_edges(n, edges, features=features)


def star(leaves: int, features: np.ndarray | None = None) -> Graph:
    return Graph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)], features=features)


def constant_features(n: int, dim: int = 1) -> np.ndarray:
    return np.ones((n, dim), dtype=np.float64)


def gnp(n: int, p: float, seed: int, features: np.ndarray | None = None) -> Graph:
    """Erdos-Renyi G(n, p) with a seeded Philox stream."""
    rng = make_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    mask = rng.random(len(iu)) < p
    edges = np.stack([iu[mask], ju[mask]], axis=1)
    return Graph.from_edges(n, edges, features=features)


def sbm(
    sizes: tuple[int, int],
    p_in: float,
    p_out: float,
    seed: int,
    features: np.ndarray | None = None,
) -> Graph:
    """Two-block stochastic block model."""
    n = sizes[0] + sizes[1]
    block = np.concatenate([np.zeros(sizes[0], dtype=int), np.ones(sizes[1], dtype=int)])
    rng = make_rng(seed)
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    mask = rng.random(len(iu)) < prob
    edges = np.stack([iu[mask], ju[mask]], axis=1)
    return Graph.from_edges(n, edges, features=features)


def two_cliques(k: int, bridges: int = 1, features: np.ndarray | None = None) -> Graph:
    """Two k-cliques joined by a few bridge edges; an easily separable link task."""
    edges = [(i, j) for i in range(k) for j in range(i + 1, k)]
    edges += [(k + i, k + j) for i in range(k) for j in range(i + 1, k)]
    edges += [(i, k + i) for i in range(min(bridges, k))]
    return Graph.from_edges(2 * k, edges, features=features)


def random_regular(n: int, degree: int, seed: int, features: np.ndarray | None = None) -> Graph:
    """Random d-regular graph via the configuration model with rejection."""
    if n * degree % 2 != 0:
        raise ValueError(f"n * degree must be even, got n={n}, degree={degree}")
    rng = make_rng(seed)
    for _ in range(1000):
        stubs = np.repeat(np.arange(n), degree)
        rng.shuffle(stubs)
        pairs = stubs.reshape(-1, 2)
        if (pairs[:, 0] == pairs[:, 1]).any():
            continue
        canon = {(int(min(u, v)), int(max(u, v))) for u, v in pairs}
        if len(canon) != len(pairs):
            continue
        return Graph.from_edges(n, sorted(canon), features=features)
    raise RuntimeError(f"failed to sample a {degree}-regular graph on {n} nodes")
