"""Shared fixtures and independent oracles for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

import pathlink.tensor as T


def dense_adjacency(n: int, edges) -> np.ndarray:
    a = np.zeros((n, n))
    for u, v in edges:
        a[u, v] = a[v, u] = 1.0
    return a


def floyd_warshall(adj: np.ndarray) -> np.ndarray:
    """Reference all-pairs hop distances via min-plus iteration; inf = unreachable."""
    n = adj.shape[0]
    dist = np.where(adj > 0, 1.0, np.inf)
    np.fill_diagonal(dist, 0.0)
    for k in range(n):
        dist = np.minimum(dist, dist[:, k, None] + dist[None, k, :])
    return dist


def fd_gradient_check(make_loss, params, probes=20, h=1e-4, seed=0):
    """Worst relative error between analytic gradients and central differences.

    Probes random parameter coordinates. When the h and h/8 difference
    quotients disagree, the probe sits in a non-smooth or high-curvature
    neighborhood (a ReLU kink, typically) and the smaller-step estimate is
    the valid one; the check stays entirely independent of the tape.
    """
    rng = np.random.default_rng(seed)
    params = [p for p in params if p.data.size]
    T.zero_grads(params)
    with T.Tape():
        loss = make_loss()
        T.backward(loss)
    worst = 0.0
    for _ in range(probes):
        p = params[rng.integers(len(params))]
        flat = int(rng.integers(p.data.size))
        orig = p.data.flat[flat]

        def fd_at(step):
            p.data.flat[flat] = orig + step
            up = make_loss().item()
            p.data.flat[flat] = orig - step
            down = make_loss().item()
            p.data.flat[flat] = orig
            return (up - down) / (2.0 * step)

        fd = fd_at(h)
        fd_small = fd_at(h / 8.0)
        if abs(fd - fd_small) > 1e-7 * max(1.0, abs(fd), abs(fd_small)):
            fd = fd_small
        analytic = p.grad.flat[flat]
        worst = max(worst, abs(fd - analytic) / max(1.0, abs(fd), abs(analytic)))
    return worst


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
