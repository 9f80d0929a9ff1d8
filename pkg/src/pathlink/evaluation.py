"""Ranked link-prediction evaluation: MRR and Hits@K with shared negatives.

Each positive is ranked against one shared list of negative candidates.
Ties get the fractional (average) rank, so rank = 1 + #strictly_better +
#ties / 2; every reported number is a pure function of score order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Graph
from .splits import LinkSplit


@dataclass(frozen=True)
class EvalReport:
    mrr: float
    hits: dict[int, float]
    ranks: np.ndarray = field(repr=False)
    num_negatives: int
    seed: int | None = None
    wall_time_s: float = 0.0


def ranks_against_shared(pos_scores: np.ndarray, neg_scores: np.ndarray) -> np.ndarray:
    """Fractional rank of each positive score within the shared negative list."""
    pos = np.asarray(pos_scores, dtype=np.float64)
    neg_sorted = np.sort(np.asarray(neg_scores, dtype=np.float64))
    hi = np.searchsorted(neg_sorted, pos, side="right")
    lo = np.searchsorted(neg_sorted, pos, side="left")
    greater = len(neg_sorted) - hi
    ties = hi - lo
    return 1.0 + greater + 0.5 * ties


def report_from_ranks(ranks: np.ndarray, num_negatives: int, ks, seed=None, wall_time_s=0.0) -> EvalReport:
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.size == 0:
        raise ValueError("cannot evaluate an empty positive set")
    return EvalReport(
        mrr=float(np.mean(1.0 / ranks)),
        hits={int(k): float(np.mean(ranks <= k)) for k in ks},
        ranks=ranks,
        num_negatives=num_negatives,
        seed=seed,
        wall_time_s=wall_time_s,
    )


def score_and_rank(model, mp_graph, index, positives, negatives) -> np.ndarray:
    """Score positives and the shared negatives once each, then rank."""
    pos_scores = model.logits(mp_graph, index, positives).data
    neg_scores = model.logits(mp_graph, index, negatives).data
    return ranks_against_shared(pos_scores, neg_scores)


def audit_no_leakage(mp_graph: Graph, split: LinkSplit, allow_valid: bool = False) -> None:
    """Assert that no valid/test positive is present in the encoder's adjacency."""
    mp_edges = {(int(u), int(v)) for u, v in mp_graph.edges}
    checked = (("valid", split.valid_pos), ("test", split.test_pos))
    if allow_valid:
        checked = (("test", split.test_pos),)
    for name, pos in checked:
        held_out = {(int(min(u, v)), int(max(u, v))) for u, v in pos}
        leaked = mp_edges & held_out
        if leaked:
            raise AssertionError(
                f"{len(leaked)} {name} positives leaked into the message-passing graph, "
                f"e.g. {sorted(leaked)[:3]}"
            )
