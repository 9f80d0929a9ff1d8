"""Second-stage calibration: isolate epochs / lr / batch effects on sp4lp vs pure."""

import sys
import time

import numpy as np

from pathlink.encoders import EncoderConfig
from pathlink.generators import sbm
from pathlink.models import LinkScorerConfig, PhiConfig
from pathlink.splits import make_split, with_shared_negatives
from pathlink.training import TrainConfig, train, evaluate

label = sys.argv[1]
lr = float(sys.argv[2])
epochs = int(sys.argv[3])
batch = int(sys.argv[4])
patience = int(sys.argv[5])
neg_base = int(sys.argv[6])

tc = TrainConfig(lr=lr, epochs=epochs, batch_size=batch, eval_every=5, patience=patience, ks=(10,))


def cfg_for(scorer):
    return LinkScorerConfig(
        scorer=scorer,
        encoder=EncoderConfig(kind="gcn", layers=2, hidden=32),
        phi=PhiConfig(kind="injective_sum", hidden=32) if scorer == "sp4lp" else None,
        rho_hidden=32,
    )


g = sbm((200, 200), 0.08, 0.005, seed=100)
out = {}
for scorer in ("sp4lp", "pure_gnn"):
    vals = []
    for seed in range(3):
        split = make_split(g, (0.85, 0.05, 0.10), seed=seed)
        split = with_shared_negatives(g, split, 100, seed=neg_base + seed)
        t0 = time.perf_counter()
        bundle, curve = train(g, split, cfg_for(scorer), tc, seed=seed)
        rep = evaluate(bundle, g, split)
        vals.append(rep.mrr)
        print(
            f"[{label}] seed {seed} {scorer}: {rep.mrr:.4f} "
            f"({time.perf_counter()-t0:.0f}s, {len(curve)} epochs)",
            flush=True,
        )
    out[scorer] = np.mean(vals)
print(
    f"[{label}] sp4lp {out['sp4lp']:.4f} vs pure {out['pure_gnn']:.4f} "
    f"margin {out['sp4lp']-out['pure_gnn']:+.4f}"
)
