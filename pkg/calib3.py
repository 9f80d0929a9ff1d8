"""Stage-3 calibration: average the margin over several negative draws."""

import sys
import time
from dataclasses import replace

import numpy as np

from pathlink.encoders import EncoderConfig
from pathlink.generators import sbm
from pathlink.models import LinkScorerConfig, PhiConfig
from pathlink.splits import make_split, sample_negatives, with_shared_negatives
from pathlink.training import TrainConfig, train, evaluate

label = sys.argv[1]
enc_kind = sys.argv[2]
layers = int(sys.argv[3])
hidden = int(sys.argv[4])
lr = float(sys.argv[5])
epochs = int(sys.argv[6])
wd = float(sys.argv[7]) if len(sys.argv) > 7 else 0.0

tc = TrainConfig(lr=lr, weight_decay=wd, epochs=epochs, batch_size=1024, eval_every=5,
                 patience=20, ks=(10,))


def cfg_for(scorer):
    return LinkScorerConfig(
        scorer=scorer,
        encoder=EncoderConfig(kind=enc_kind, layers=layers, hidden=hidden),
        phi=PhiConfig(kind="injective_sum", hidden=hidden) if scorer == "sp4lp" else None,
        rho_hidden=hidden,
    )


g = sbm((200, 200), 0.08, 0.005, seed=100)
means = {}
t0 = time.perf_counter()
for scorer in ("sp4lp", "pure_gnn"):
    per_seed = []
    for seed in range(3):
        split = make_split(g, (0.85, 0.05, 0.10), seed=seed)
        split = with_shared_negatives(g, split, 100, seed=900 + seed)
        bundle, _ = train(g, split, cfg_for(scorer), tc, seed=seed)
        # rescore against several independent negative draws to tame noise
        vals = []
        for nseed in range(5):
            s2 = replace(split, test_neg=sample_negatives(g, 100, rng=7000 + nseed))
            vals.append(evaluate(bundle, g, s2).mrr)
        per_seed.append(np.mean(vals))
        print(f"[{label}] seed {seed} {scorer}: {np.mean(vals):.4f} {[f'{v:.3f}' for v in vals]}",
              flush=True)
    means[scorer] = float(np.mean(per_seed))
print(f"[{label}] {enc_kind} L{layers} h{hidden} lr{lr} ep{epochs} wd{wd}: "
      f"sp4lp {means['sp4lp']:.4f} vs pure {means['pure_gnn']:.4f} "
      f"margin {means['sp4lp'] - means['pure_gnn']:+.4f} ({time.perf_counter()-t0:.0f}s)")
