"""Ground truth for structural-equivalence checks.

Three tools: 1-WL color refinement, brute-force automorphism enumeration
(small graphs only), and orbit tables for nodes and unordered node pairs.
The orbit machinery is the reference against which the learned scorers'
invariance properties are tested.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph import Graph

AUTOMORPHISM_NODE_CAP = 10

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Coloring:
    """Stable 1-WL coloring. Color ids are dense, ordered by first occurrence."""

    colors: np.ndarray
    rounds: int


@dataclass(frozen=True)
class LinkOrbitTable:
    """Orbit id for every unordered pair of distinct nodes.

    orbit is an (n, n) symmetric int array with -1 on the diagonal; two pairs
    share an orbit id iff some automorphism maps one onto the other.
    """

    orbit: np.ndarray
    automorphism_count: int

    @property
    def num_orbits(self) -> int:
        return int(self.orbit.max()) + 1 if self.orbit.size and self.orbit.max() >= 0 else 0

    def orbit_of(self, u: int, v: int) -> int:
        if u == v:
            raise ValueError("pair orbits are defined for distinct nodes")
        return int(self.orbit[u, v])


def _fnv64(ints) -> int:
    h = _FNV_OFFSET
    for x in ints:
        for shift in (0, 8, 16, 24, 32):
            h ^= (x >> shift) & 0xFF
            h = (h * _FNV_PRIME) & _MASK64
    return h


def wl_refine(g: Graph, init: np.ndarray | None = None, max_rounds: int | None = None) -> Coloring:
    """Iterate color(v) <- hash(color(v), sorted neighbor colors) to a fixed point.

    Signatures are hashed with 64-bit FNV-1a for speed; a detected collision
    falls back to exact signature interning so the result never depends on
    hash luck. Final ids are canonicalized by first occurrence, which also
    makes the fallback invisible to callers. `max_rounds` truncates the
    refinement early; the truncated coloring is still a graph invariant.
    """
    if init is None:
        colors = np.zeros(g.n, dtype=np.int64)
    else:
        colors = np.asarray(init, dtype=np.int64).copy()
        if colors.shape != (g.n,):
            raise ValueError(f"init colors must have shape ({g.n},), got {colors.shape}")
        colors = _canonicalize(colors)
    rounds = 0
    while max_rounds is None or rounds < max_rounds:
        rounds += 1
        signatures = [
            (int(colors[v]), tuple(sorted(int(colors[u]) for u in g.neighbors(v))))
            for v in range(g.n)
        ]
        hashed = np.fromiter(
            (_fnv64((sig[0], len(sig[1])) + sig[1]) for sig in signatures),
            dtype=np.uint64,
            count=g.n,
        )
        if _has_collision(hashed, signatures):
            interned: dict = {}
            hashed = np.fromiter(
                (interned.setdefault(sig, len(interned)) for sig in signatures),
                dtype=np.uint64,
                count=g.n,
            )
        new_colors = _canonicalize(hashed.astype(np.int64))
        if np.array_equal(new_colors, colors):
            return Coloring(colors=colors, rounds=rounds)
        colors = new_colors
    return Coloring(colors=colors, rounds=rounds)


def feature_colors(g: Graph) -> np.ndarray:
    """Initial WL colors derived from exact node-feature rows."""
    seen: dict = {}
    return np.fromiter(
        (seen.setdefault(g.features[v].tobytes(), len(seen)) for v in range(g.n)),
        dtype=np.int64,
        count=g.n,
    )


def _canonicalize(colors: np.ndarray) -> np.ndarray:
    remap: dict = {}
    out = np.empty_like(colors)
    for i, c in enumerate(colors):
        out[i] = remap.setdefault(int(c), len(remap))
    return out


def _has_collision(hashed: np.ndarray, signatures) -> bool:
    seen: dict = {}
    for h, sig in zip(hashed.tolist(), signatures):
        if seen.setdefault(h, sig) != sig:
            return True
    return False


# -- brute-force automorphisms -------------------------------------------------


def enumerate_automorphisms(
    g: Graph, respect_features: bool = False, cap: int = AUTOMORPHISM_NODE_CAP
) -> list[tuple[int, ...]]:
    """All adjacency-preserving node permutations, identity included.

    Backtracking over candidate images, pruned by WL color (WL colors refine
    degrees, so equal color implies equal degree). `respect_features`
    additionally requires permutations to preserve feature rows exactly.
    Hard-capped at `cap` nodes; use WL colors alone for anything larger.
    """
    if g.n > cap:
        raise ValueError(
            f"automorphism enumeration is capped at n <= {cap} (got n = {g.n}); "
            "fall back to WL-only mode (wl_refine) for larger graphs"
        )
    colors = wl_refine(g).colors
    if respect_features:
        colors = wl_refine(g, init=_merge_colors(colors, feature_colors(g))).colors
    adj = [set(g.neighbors(v).tolist()) for v in range(g.n)]
    # fixing nodes in (degree, color) order keeps candidate classes small early
    order = sorted(range(g.n), key=lambda v: (g.degree(v), int(colors[v]), v))
    candidates = {v: [w for w in range(g.n) if colors[w] == colors[v]] for v in order}

    result: list[tuple[int, ...]] = []
    image = [-1] * g.n
    used = [False] * g.n

    def extend(pos: int) -> None:
        if pos == len(order):
            result.append(tuple(image))
            return
        v = order[pos]
        for w in candidates[v]:
            if used[w]:
                continue
            ok = True
            for x in order[:pos]:
                if (x in adj[v]) != (image[x] in adj[w]):
                    ok = False
                    break
            if ok:
                image[v] = w
                used[w] = True
                extend(pos + 1)
                used[w] = False
                image[v] = -1

    extend(0)
    result.sort()
    return result


def node_orbits(g: Graph, automorphisms=None) -> np.ndarray:
    """Orbit id per node under the automorphism group; dense, by first occurrence."""
    autos = enumerate_automorphisms(g) if automorphisms is None else automorphisms
    orbit = np.full(g.n, -1, dtype=np.int64)
    next_id = 0
    for v in range(g.n):
        if orbit[v] >= 0:
            continue
        for sigma in autos:
            orbit[sigma[v]] = next_id
        next_id += 1
    return orbit


def link_orbits(g: Graph, automorphisms=None) -> LinkOrbitTable:
    """Group unordered node pairs into automorphism orbits.

    Pairs {u, v} and {u', v'} share an orbit iff some enumerated permutation
    maps one set onto the other; the table therefore covers all pairs of
    distinct nodes, edges and non-edges alike.
    """
    autos = enumerate_automorphisms(g) if automorphisms is None else automorphisms
    orbit = np.full((g.n, g.n), -1, dtype=np.int64)
    next_id = 0
    for u, v in combinations(range(g.n), 2):
        if orbit[u, v] >= 0:
            continue
        for sigma in autos:
            a, b = sigma[u], sigma[v]
            orbit[a, b] = next_id
            orbit[b, a] = next_id
        next_id += 1
    return LinkOrbitTable(orbit=orbit, automorphism_count=len(autos))


def _merge_colors(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    pairs = [(int(x), int(y)) for x, y in zip(a, b)]
    seen: dict = {}
    return np.fromiter(
        (seen.setdefault(p, len(seen)) for p in pairs), dtype=np.int64, count=len(pairs)
    )


def compose(sigma: tuple[int, ...], tau: tuple[int, ...]) -> tuple[int, ...]:
    """Permutation composition (sigma after tau)."""
    return tuple(sigma[t] for t in tau)


def invert(sigma: tuple[int, ...]) -> tuple[int, ...]:
    inv = [0] * len(sigma)
    for i, s in enumerate(sigma):
        inv[s] = i
    return tuple(inv)
