"""Immutable undirected graph with CSR adjacency and node features.

Node ids are dense 0-based integers. Neighbor lists are stored sorted
ascending; downstream BFS tie-breaking relies on that ordering, so it is
load-bearing, not cosmetic.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

# Featureless graphs get one-hot identity features. Beyond this many nodes the
# one-hot columns wrap around (node i -> column i % f_max) to keep the feature
# matrix desk-sized.
DEFAULT_F_MAX = 1024


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: no self-loops, no duplicate edges.

    Attributes:
        n: number of nodes.
        edges: (m, 2) int array, each row (u, v) with u < v, rows sorted
            lexicographically. One row per undirected edge.
        csr_offsets: (n+1,) int array; neighbors of v live in
            csr_neighbors[csr_offsets[v]:csr_offsets[v+1]].
        csr_neighbors: (2m,) int array, ascending within each node's slice.
        features: (n, f) float array of node attributes.
        labels: optional per-node debug labels.
    """

    n: int
    edges: np.ndarray
    csr_offsets: np.ndarray
    csr_neighbors: np.ndarray
    features: np.ndarray
    labels: tuple[str, ...] | None = field(default=None, compare=False)

    @classmethod
    def from_edges(
        cls,
        n: int,
        edges,
        features: np.ndarray | None = None,
        labels: tuple[str, ...] | None = None,
        f_max: int = DEFAULT_F_MAX,
    ) -> "Graph":
        """Build a graph from an iterable of (u, v) pairs.

        Reversed duplicates collapse to one undirected edge. Self-loops are
        rejected. If `features` is omitted, identity one-hot features capped
        at `f_max` columns are generated.
        """
        edge_arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        if edge_arr.size and (edge_arr.min() < 0 or edge_arr.max() >= n):
            bad = edge_arr[(edge_arr < 0).any(axis=1) | (edge_arr >= n).any(axis=1)][0]
            raise ValueError(f"edge ({bad[0]}, {bad[1]}) references a node id outside [0, {n})")
        if edge_arr.size and (edge_arr[:, 0] == edge_arr[:, 1]).any():
            v = edge_arr[edge_arr[:, 0] == edge_arr[:, 1]][0, 0]
            raise ValueError(f"self-loop on node {v} rejected")
        canon = np.sort(edge_arr, axis=1)
        canon = np.unique(canon, axis=0) if canon.size else canon.reshape(0, 2)

        offsets, neighbors = _build_csr(n, canon)

        if features is None:
            features = _identity_features(n, f_max)
        else:
            features = np.asarray(features, dtype=np.float64)
            if features.ndim != 2 or features.shape[0] != n:
                raise ValueError(
                    f"feature matrix has shape {features.shape}, expected ({n}, f)"
                )
        return cls(
            n=n,
            edges=canon.astype(np.int64),
            csr_offsets=offsets,
            csr_neighbors=neighbors,
            features=features,
            labels=labels,
        )

    # -- elementary queries -------------------------------------------------

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def neighbors(self, v: int) -> np.ndarray:
        """Sorted neighbor ids of v."""
        self._check_node(v)
        return self.csr_neighbors[self.csr_offsets[v] : self.csr_offsets[v + 1]]

    def degree(self, v: int) -> int:
        self._check_node(v)
        return int(self.csr_offsets[v + 1] - self.csr_offsets[v])

    @property
    def degrees(self) -> np.ndarray:
        return np.diff(self.csr_offsets)

    def has_edge(self, u: int, v: int) -> bool:
        nbrs = self.neighbors(u)
        i = np.searchsorted(nbrs, v)
        return bool(i < len(nbrs) and nbrs[i] == v)

    def neighbor_sum(self, x: np.ndarray) -> np.ndarray:
        """Rows of x summed over each node's neighborhood: out[v] = sum_{u in N(v)} x[u].

        Works for 1-D and 2-D x; the adjacency is symmetric so this operator
        is its own transpose.
        """
        x = np.asarray(x)
        rows = np.repeat(np.arange(self.n), self.degrees)
        out = np.zeros((self.n,) + x.shape[1:], dtype=x.dtype)
        np.add.at(out, rows, x[self.csr_neighbors])
        return out

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        if self.edges.size:
            a[self.edges[:, 0], self.edges[:, 1]] = 1.0
            a[self.edges[:, 1], self.edges[:, 0]] = 1.0
        return a

    def _check_node(self, v: int) -> None:
        if not (0 <= v < self.n):
            raise ValueError(f"node id {v} out of range [0, {self.n})")


def _build_csr(n: int, canon_edges: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if canon_edges.size:
        src = np.concatenate([canon_edges[:, 0], canon_edges[:, 1]])
        dst = np.concatenate([canon_edges[:, 1], canon_edges[:, 0]])
    else:
        src = dst = np.zeros(0, dtype=np.int64)
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.add.at(offsets, src + 1, 1)
    np.cumsum(offsets, out=offsets)
    return offsets, dst.astype(np.int64)


def _identity_features(n: int, f_max: int) -> np.ndarray:
    f = min(n, f_max)
    feats = np.zeros((n, f), dtype=np.float64)
    feats[np.arange(n), np.arange(n) % f] = 1.0
    return feats


# -- ingestion / serialization ----------------------------------------------


def load_graph(
    edge_file: str | os.PathLike,
    feature_file: str | os.PathLike | None = None,
    n: int | None = None,
    f_max: int = DEFAULT_F_MAX,
) -> Graph:
    """Load a graph from a whitespace-separated edge list and optional feature CSV.

    Edge file: one edge per line, "<u> <v>". Reversed and duplicate lines
    collapse to one undirected edge; self-loop lines raise. Feature file:
    CSV, row i = features of node i; its row count fixes n. Without features,
    n defaults to max node id + 1 (override with `n` to keep trailing
    isolated nodes).
    """
    edges = []
    max_id = -1
    with open(edge_file, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{edge_file}: line {lineno}: expected two node ids, got {line!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise ValueError(
                    f"{edge_file}: line {lineno}: non-integer node id in {line!r}"
                ) from None
            if u < 0 or v < 0:
                raise ValueError(f"{edge_file}: line {lineno}: negative node id in {line!r}")
            if u == v:
                raise ValueError(f"{edge_file}: line {lineno}: self-loop on node {u} rejected")
            edges.append((u, v))
            max_id = max(max_id, u, v)

    features = None
    if feature_file is not None:
        features = np.loadtxt(feature_file, delimiter=",", dtype=np.float64, ndmin=2)
        if n is not None and features.shape[0] != n:
            raise ValueError(
                f"feature file has {features.shape[0]} rows but n={n} was requested"
            )
        n = features.shape[0]
        if max_id >= n:
            raise ValueError(
                f"edge file references node {max_id} but feature file only covers ids [0, {n})"
            )
    if n is None:
        n = max_id + 1
    elif max_id >= n:
        raise ValueError(f"edge file references node {max_id}, out of range for n={n}")

    return Graph.from_edges(n, edges, features=features, f_max=f_max)


def serialize_edges(g: Graph) -> str:
    """Canonical edge-list text: one "u v" line per edge, u < v, sorted."""
    return "".join(f"{u} {v}\n" for u, v in g.edges)


def graph_content_hash(g: Graph) -> str:
    """Stable hex digest of the graph's structure (n + canonical edge list)."""
    import hashlib

    h = hashlib.sha256()
    h.update(f"n={g.n}\n".encode())
    h.update(serialize_edges(g).encode())
    return h.hexdigest()


# -- pairwise queries ---------------------------------------------------------


def common_neighbors(g: Graph, u: int, v: int) -> np.ndarray:
    """Sorted ids of nodes adjacent to both u and v."""
    if u == v:
        raise ValueError(f"common_neighbors requires two distinct nodes, got u = v = {u}")
    return np.intersect1d(g.neighbors(u), g.neighbors(v), assume_unique=True)
