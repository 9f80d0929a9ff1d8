"""Shortest-path preprocessing: per-source BFS distances and parent trees.

One BFS per indexed source gives hop distances plus a deterministic parent
tree, so a single canonical shortest path per pair can be reconstructed in
O(path length).

Canonical selection. Ties between equal-length paths are broken first by the
sequence of (truncated) WL colors along the path, then by the node-id
sequence, and the two endpoint trees' candidates are compared direction-free
before one is returned. WL colors are graph invariants, so two node pairs
related by an automorphism always receive paths with identical color
sequences; an id-only tie-break does not guarantee that and would leak node
labels into downstream scoring. On color-uniform graphs (regular graphs, and
any graph whose shortest paths are unique) the rule degenerates to plain
ascending-id BFS. Together with sorted neighbor lists this makes the index a
pure function of the graph.
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, serialize_edges

UNREACHABLE = -1  # sentinel in dist/parent arrays ("infinite" hop distance)

# WL rounds used for tie-breaking; truncation keeps long-diameter graphs cheap
# and any fixed round count is still automorphism-invariant.
TIEBREAK_WL_ROUNDS = 16

# Above this node count an all-pairs index would not be desk-sized; callers
# should restrict sources to the nodes their link set actually touches.
ALL_PAIRS_NODE_LIMIT = 20_000


@dataclass(frozen=True)
class Path:
    """A node sequence (u_0, ..., u_k); k = number of edges.

    `synthetic` marks the length-1 fallback pair assigned to disconnected
    endpoints; only then may consecutive nodes be non-adjacent.
    """

    nodes: tuple[int, ...]
    synthetic: bool = False

    @property
    def length(self) -> int:
        return len(self.nodes) - 1

    def __post_init__(self) -> None:
        if len(self.nodes) < 2:
            raise ValueError("a path needs at least two nodes")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError(f"path nodes must be distinct, got {self.nodes}")


@dataclass(frozen=True)
class PathIndex:
    """BFS results for a set of source nodes over one graph."""

    sources: np.ndarray  # (s,) indexed source ids
    dist: np.ndarray  # (s, n) hop distances, UNREACHABLE where no path
    parent: np.ndarray  # (s, n) BFS parents, UNREACHABLE at source/unreached
    colors: np.ndarray  # (n,) tie-break colors used during construction
    _row: dict = field(default_factory=dict, repr=False, compare=False)
    _detours: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        self._row.update({int(s): i for i, s in enumerate(self.sources)})

    def has_source(self, s: int) -> bool:
        return s in self._row

    def distance(self, s: int, v: int) -> int:
        """Hop distance from indexed source s to v; UNREACHABLE if none."""
        return int(self.dist[self._source_row(s), v])

    def _source_row(self, s: int) -> int:
        try:
            return self._row[s]
        except KeyError:
            raise KeyError(f"node {s} is not an indexed source") from None


def build_index(g: Graph, sources=None, n_jobs: int = 1) -> PathIndex:
    """Run one deterministic BFS per source.

    `sources=None` indexes every node (the all-pairs case, O(n*m) total).
    Builds are independent per source and run on `n_jobs` threads.
    """
    if sources is None:
        src = np.arange(g.n, dtype=np.int64)
    else:
        src = np.unique(np.asarray(list(sources), dtype=np.int64))
        if src.size and (src[0] < 0 or src[-1] >= g.n):
            raise ValueError(f"source ids must lie in [0, {g.n})")
    from .symmetry import wl_refine

    colors = wl_refine(g, max_rounds=TIEBREAK_WL_ROUNDS).colors
    dist = np.full((len(src), g.n), UNREACHABLE, dtype=np.int32)
    parent = np.full((len(src), g.n), UNREACHABLE, dtype=np.int32)

    def run(i: int) -> None:
        _bfs(g.csr_offsets, g.csr_neighbors, colors, int(src[i]), dist[i], parent[i])

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            list(pool.map(run, range(len(src))))
    else:
        for i in range(len(src)):
            run(i)
    return PathIndex(sources=src, dist=dist, parent=parent, colors=colors)


def _dense_rank(*keys: np.ndarray) -> np.ndarray:
    """Dense lexicographic rank of rows given key columns, primary first."""
    order = np.lexsort(keys[::-1])
    change = np.zeros(len(order), dtype=bool)
    for k in keys:
        ks = k[order]
        change[1:] |= ks[1:] != ks[:-1]
    ranks = np.cumsum(change)
    out = np.empty(len(order), dtype=np.int64)
    out[order] = ranks
    return out


def _bfs(
    offsets: np.ndarray,
    neighbors: np.ndarray,
    colors: np.ndarray,
    s: int,
    dist: np.ndarray,
    parent: np.ndarray,
    skip_edge: tuple[int, int] | None = None,
) -> None:
    """Level-synchronous BFS whose parent tree realizes, for every node, the
    shortest path from s minimizing (color sequence, id sequence).

    The frontier is kept sorted by that prefix order, so a node's first
    discoverer is exactly its best predecessor; per-level dense ranks stand in
    for the (unbounded) prefix keys. `skip_edge` removes one undirected edge
    from consideration, which is what target-edge masking needs.
    """
    dist[s] = 0
    frontier = np.array([s], dtype=np.int64)
    # rank of each frontier node's (color-seq) and (color-seq, id-seq) prefix
    crank = np.zeros(1, dtype=np.int64)
    irank = np.zeros(1, dtype=np.int64)
    level = 0
    while frontier.size:
        starts = offsets[frontier]
        counts = offsets[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            break
        ends = np.cumsum(counts)
        flat = np.arange(total) - np.repeat(ends - counts, counts) + np.repeat(starts, counts)
        nbrs = neighbors[flat]
        origin_pos = np.repeat(np.arange(len(frontier)), counts)
        fresh = dist[nbrs] == UNREACHABLE
        if skip_edge is not None:
            origin = frontier[origin_pos]
            a, b = skip_edge
            fresh &= ~(((origin == a) & (nbrs == b)) | ((origin == b) & (nbrs == a)))
        if not fresh.any():
            break
        cand, cand_pos = nbrs[fresh], origin_pos[fresh]
        # first occurrence per candidate = best-prefix predecessor, because the
        # frontier (hence the expansion) is ordered by (crank, irank) already
        uniq, first = np.unique(cand, return_index=True)
        best_pos = cand_pos[first]
        level += 1
        dist[uniq] = level
        parent[uniq] = frontier[best_pos]
        c_par, i_par, c_own = crank[best_pos], irank[best_pos], colors[uniq]
        crank = _dense_rank(c_par, c_own)
        irank = _dense_rank(c_par, c_own, i_par, uniq)
        order = np.argsort(irank, kind="stable")
        frontier, crank, irank = uniq[order], crank[order], irank[order]


def _chain(idx: PathIndex, row: int, a: int, b: int) -> list[int]:
    chain = [b]
    node = b
    while node != a:
        node = int(idx.parent[row, node])
        chain.append(node)
    chain.reverse()
    return chain


def _direction_free_key(nodes: list[int], colors: np.ndarray) -> tuple:
    cs = tuple(int(colors[v]) for v in nodes)
    ids = tuple(nodes)
    csr_, idsr = cs[::-1], ids[::-1]
    return (min(cs, csr_), max(cs, csr_), min(ids, idsr), max(ids, idsr))


def shortest_path(idx: PathIndex, g: Graph, u: int, v: int) -> Path:
    """Canonical shortest path between u and v, oriented from u to v.

    Both endpoint parent trees propose their best path and the direction-free
    (color sequence, id sequence) comparison picks one, so the result is
    independent of argument order and of node labeling within a color class.
    A disconnected pair gets the synthetic fallback Path((u, v)) of length 1.
    At least one endpoint must be an indexed source.
    """
    if u == v:
        raise ValueError(f"shortest_path requires two distinct nodes, got u = v = {u}")
    g._check_node(u)
    g._check_node(v)
    a, b = (u, v) if u < v else (v, u)
    rows = {}
    for s in (a, b):
        if idx.has_source(s):
            rows[s] = idx._source_row(s)
    if not rows:
        raise KeyError(f"node {a} is not an indexed source")
    src = a if a in rows else b
    if idx.dist[rows[src], b if src == a else a] == UNREACHABLE:
        return Path(nodes=(u, v), synthetic=True)
    candidates = []
    if a in rows:
        candidates.append(_chain(idx, rows[a], a, b))
    if b in rows:
        candidates.append(_chain(idx, rows[b], b, a)[::-1])  # orient a -> b
    if len(candidates) == 2 and candidates[0] == candidates[1]:
        candidates.pop()
    best = min(candidates, key=lambda nodes: _direction_free_key(nodes, idx.colors))
    if u != a:
        best = best[::-1]
    return Path(nodes=tuple(best), synthetic=False)


def detour_path(idx: PathIndex, g: Graph, u: int, v: int) -> Path:
    """Shortest path between adjacent u and v that avoids their direct edge.

    Used when scoring a pair whose edge is part of the graph (training
    positives): without masking, the path feature of every known edge
    collapses to the edge itself and never matches what held-out pairs look
    like. Computed by a BFS with the one edge removed; results are cached on
    the index since the graph is static, so each edge pays for its masked BFS
    once. Falls back to the synthetic pair when the edge is a bridge.
    """
    if not g.has_edge(u, v):
        return shortest_path(idx, g, u, v)
    a, b = (u, v) if u < v else (v, u)
    nodes = idx._detours.get((a, b))
    if nodes is None:
        dist = np.full(g.n, UNREACHABLE, dtype=np.int32)
        parent = np.full(g.n, UNREACHABLE, dtype=np.int32)
        _bfs(g.csr_offsets, g.csr_neighbors, idx.colors, a, dist, parent, skip_edge=(a, b))
        if dist[b] == UNREACHABLE:
            nodes = (a, b)
        else:
            chain = [b]
            node = b
            while node != a:
                node = int(parent[node])
                chain.append(node)
            nodes = tuple(reversed(chain))
        idx._detours[(a, b)] = nodes
    synthetic = len(nodes) == 2 and nodes == (a, b)
    oriented = nodes if u == a else nodes[::-1]
    return Path(nodes=oriented, synthetic=synthetic)


# -- binary cache --------------------------------------------------------------


def index_cache_key(g: Graph, sources=None) -> str:
    """Digest identifying (graph structure, source set) for cache lookups."""
    h = hashlib.sha256()
    h.update(f"n={g.n}\n".encode())
    h.update(serialize_edges(g).encode())
    if sources is None:
        h.update(b"sources=all\n")
    else:
        src = np.unique(np.asarray(list(sources), dtype=np.int64))
        h.update(b"sources=" + src.tobytes())
    return h.hexdigest()


def save_index(idx: PathIndex, g: Graph, cache_dir: str | os.PathLike, sources=None) -> str:
    """Persist the index under its content-hash key; returns the file path."""
    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"pathindex-{index_cache_key(g, sources)}.npz")
    np.savez_compressed(
        path, sources=idx.sources, dist=idx.dist, parent=idx.parent, colors=idx.colors
    )
    return path


def load_index(g: Graph, cache_dir: str | os.PathLike, sources=None) -> PathIndex | None:
    """Load a previously saved index for this graph, or None on cache miss."""
    path = os.path.join(cache_dir, f"pathindex-{index_cache_key(g, sources)}.npz")
    if not os.path.exists(path):
        return None
    with np.load(path) as data:
        return PathIndex(
            sources=data["sources"],
            dist=data["dist"],
            parent=data["parent"],
            colors=data["colors"],
        )


def index_stats(idx: PathIndex) -> dict:
    """Summary stats: max finite distance and number of unreachable (source, node) pairs."""
    finite = idx.dist[idx.dist != UNREACHABLE]
    unreachable = int((idx.dist == UNREACHABLE).sum())
    return {
        "sources": int(len(idx.sources)),
        "max_distance": int(finite.max()) if finite.size else 0,
        "unreachable_pairs": unreachable,
    }
