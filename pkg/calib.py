"""Throwaway calibration script for the end-to-end direction check."""

import sys
import time

import numpy as np

from pathlink.encoders import EncoderConfig
from pathlink.generators import sbm
from pathlink.models import LinkScorerConfig, PhiConfig
from pathlink.splits import make_split, with_shared_negatives
from pathlink.training import TrainConfig, train, evaluate

graph_seed = int(sys.argv[1])
lr = float(sys.argv[2])
epochs = int(sys.argv[3])
phi_kind = sys.argv[4]
hidden = int(sys.argv[5]) if len(sys.argv) > 5 else 32

tc = TrainConfig(lr=lr, epochs=epochs, batch_size=1024, eval_every=5, patience=1000, ks=(10,))


def cfg_for(scorer):
    return LinkScorerConfig(
        scorer=scorer,
        encoder=None
        if scorer == "ablate_seq_only"
        else EncoderConfig(kind="gcn", layers=2, hidden=hidden),
        phi=PhiConfig(kind=phi_kind, hidden=hidden)
        if scorer in ("sp4lp", "ablate_seq_only")
        else None,
        rho_hidden=hidden,
    )


g = sbm((200, 200), 0.08, 0.005, seed=graph_seed)
results = {s: [] for s in ("sp4lp", "pure_gnn", "ablate_seq_only", "ablate_len_only")}
t_all = time.perf_counter()
for seed in range(3):
    split = make_split(g, (0.85, 0.05, 0.10), seed=seed)
    split = with_shared_negatives(g, split, 100, seed=900 + seed)
    for scorer in results:
        bundle, _ = train(g, split, cfg_for(scorer), tc, seed=seed)
        rep = evaluate(bundle, g, split)
        results[scorer].append(rep.mrr)
        print(f"seed {seed} {scorer}: {rep.mrr:.4f}", flush=True)
print(f"total {time.perf_counter() - t_all:.0f}s  graph_seed={graph_seed} lr={lr} epochs={epochs} phi={phi_kind}")
means = {s: np.mean(v) for s, v in results.items()}
for s, v in results.items():
    print(s, "mean", f"{means[s]:.4f}", [f"{x:.3f}" for x in v])
ok = (
    means["sp4lp"] > means["pure_gnn"]
    and means["sp4lp"] >= means["ablate_seq_only"]
    and means["sp4lp"] >= means["ablate_len_only"]
)
print("ORDERING", "HOLDS" if ok else "BROKEN",
      f"margin_vs_pure={means['sp4lp'] - means['pure_gnn']:.4f}")
