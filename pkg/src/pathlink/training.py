"""Training loop and model bundles.

One run: encode the train-edge graph, score mini-batches of positives plus an
equal count of freshly sampled negatives under BCE-with-logits, update with
Adam, and early-stop on validation MRR. All randomness branches off a single
run seed, so identical inputs reproduce identical loss curves bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np

from . import checkpoint as ckpt
from .encoders import EncoderConfig
from .evaluation import EvalReport, audit_no_leakage, report_from_ranks, score_and_rank
from .graph import Graph
from .models import LinkPredictor, LinkScorerConfig, PhiConfig
from .paths import ALL_PAIRS_NODE_LIMIT, PathIndex, build_index
from .splits import LinkSplit, message_passing_graph, sample_negatives, with_shared_negatives
from .tensor import NonFiniteError, Tape, adam_init, adam_step, backward, bce_with_logits, make_rng


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-2
    weight_decay: float = 0.0
    epochs: int = 200
    batch_size: int = 1024
    eval_every: int = 5  # epochs between validation-MRR checks
    patience: int = 20  # checks without improvement before stopping
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    eval_negatives: int = 100
    ks: tuple[int, ...] = (10,)


@dataclass
class ModelBundle:
    """Everything needed to reload and rescore: model plus all configs."""

    model: LinkPredictor
    scorer_cfg: LinkScorerConfig
    train_cfg: TrainConfig
    in_dim: int
    seed: int

    def save(self, path) -> None:
        config = {
            "scorer_cfg": _scorer_cfg_to_dict(self.scorer_cfg),
            "train_cfg": asdict(self.train_cfg),
            "in_dim": self.in_dim,
            "seed": self.seed,
        }
        ckpt.save_checkpoint(path, self.model.parameters(), config)

    @classmethod
    def load(cls, path) -> "ModelBundle":
        stored, config = ckpt.load_checkpoint(path)
        scorer_cfg = _scorer_cfg_from_dict(config["scorer_cfg"])
        train_dict = dict(config["train_cfg"])
        train_dict["ks"] = tuple(train_dict["ks"])
        train_cfg = TrainConfig(**train_dict)
        model = LinkPredictor(scorer_cfg, config["in_dim"], make_rng(0))
        ckpt.restore_params(model.parameters(), stored)
        return cls(
            model=model,
            scorer_cfg=scorer_cfg,
            train_cfg=train_cfg,
            in_dim=config["in_dim"],
            seed=config["seed"],
        )


def _scorer_cfg_to_dict(cfg: LinkScorerConfig) -> dict:
    return {
        "scorer": cfg.scorer,
        "encoder": asdict(cfg.encoder) if cfg.encoder else None,
        "phi": asdict(cfg.phi) if cfg.phi else None,
        "rho_hidden": cfg.rho_hidden,
        "prediction_layers": cfg.prediction_layers,
    }


def _scorer_cfg_from_dict(d: dict) -> LinkScorerConfig:
    return LinkScorerConfig(
        scorer=d["scorer"],
        encoder=EncoderConfig(**d["encoder"]) if d["encoder"] else None,
        phi=PhiConfig(**d["phi"]) if d["phi"] else None,
        rho_hidden=d["rho_hidden"],
        prediction_layers=d["prediction_layers"],
    )


def needs_paths(cfg: LinkScorerConfig) -> bool:
    return cfg.scorer in ("sp4lp", "ablate_seq_only", "ablate_len_only")


def build_training_index(mp_graph: Graph, cfg: LinkScorerConfig, n_jobs: int = 1) -> PathIndex | None:
    if not needs_paths(cfg):
        return None
    if mp_graph.n > ALL_PAIRS_NODE_LIMIT:
        raise ValueError(
            f"all-pairs path index above {ALL_PAIRS_NODE_LIMIT} nodes is not desk-sized; "
            "build an index restricted to the link sources instead"
        )
    return build_index(mp_graph, n_jobs=n_jobs)


def train(
    g: Graph,
    split: LinkSplit,
    scorer_cfg: LinkScorerConfig,
    train_cfg: TrainConfig = TrainConfig(),
    seed: int = 0,
) -> tuple[ModelBundle, list[float]]:
    """Fit one model; returns the best-validation bundle and the loss curve."""
    if split.valid_neg is None:
        split = with_shared_negatives(g, split, train_cfg.eval_negatives, seed=seed + 1_000_003)
    mp_graph = message_passing_graph(g, split)
    audit_no_leakage(mp_graph, split)
    index = build_training_index(mp_graph, scorer_cfg)
    if index is not None and scorer_cfg.phi is not None and scorer_cfg.phi.kind == "attention":
        longest = int(index.dist.max()) + 1  # nodes on the longest indexed path
        if longest > scorer_cfg.phi.max_len:
            raise ValueError(
                f"phi max_len {scorer_cfg.phi.max_len} is too small for paths of "
                f"{longest} nodes in the training index"
            )

    root = make_rng(seed)
    model_rng, neg_rng, shuffle_rng, dropout_rng = root.spawn(4)
    model = LinkPredictor(scorer_cfg, g.feature_dim, model_rng)
    params = model.param_list()
    opt = adam_init(
        params,
        lr=train_cfg.lr,
        beta1=train_cfg.beta1,
        beta2=train_cfg.beta2,
        eps=train_cfg.eps,
        weight_decay=train_cfg.weight_decay,
    )

    train_pos = split.train_pos
    curve: list[float] = []
    best_mrr = -np.inf
    best_params = {k: v.data.copy() for k, v in model.parameters().items()}
    checks_left = train_cfg.patience

    for epoch in range(train_cfg.epochs):
        negs = sample_negatives(g, len(train_pos), neg_rng, mode="train_per_step")
        order = shuffle_rng.permutation(len(train_pos))
        epoch_loss = 0.0
        for start in range(0, len(train_pos), train_cfg.batch_size):
            batch_idx = order[start : start + train_cfg.batch_size]
            pairs = np.concatenate([train_pos[batch_idx], negs[batch_idx]])
            labels = np.concatenate([np.ones(len(batch_idx)), np.zeros(len(batch_idx))])
            try:
                with Tape():
                    logits = model.logits(
                        mp_graph,
                        index,
                        pairs,
                        training=True,
                        rng=dropout_rng,
                        mask_target_edges=True,
                    )
                    loss = bce_with_logits(logits, labels)
                    backward(loss)
            except NonFiniteError as err:
                raise RuntimeError(_divergence_report(err, epoch, model)) from err
            loss_val = loss.item()
            if not np.isfinite(loss_val):
                raise RuntimeError(_divergence_report("non-finite loss", epoch, model))
            adam_step(opt, params)
            epoch_loss += loss_val * len(batch_idx)
        curve.append(epoch_loss / len(train_pos))

        if (epoch + 1) % train_cfg.eval_every == 0:
            ranks = score_and_rank(model, mp_graph, index, split.valid_pos, split.valid_neg)
            val_mrr = float(np.mean(1.0 / ranks))
            if val_mrr > best_mrr:
                best_mrr = val_mrr
                best_params = {k: v.data.copy() for k, v in model.parameters().items()}
                checks_left = train_cfg.patience
            else:
                checks_left -= 1
                if checks_left == 0:
                    break

    if best_mrr > -np.inf:  # otherwise no validation check ever ran; keep final params
        for name, tensor in model.parameters().items():
            tensor.data[...] = best_params[name]
    bundle = ModelBundle(
        model=model, scorer_cfg=scorer_cfg, train_cfg=train_cfg, in_dim=g.feature_dim, seed=seed
    )
    return bundle, curve


def evaluate(
    bundle: ModelBundle,
    g: Graph,
    split: LinkSplit,
    ks: tuple[int, ...] | None = None,
    on: str = "test",
    include_valid_edges: bool = False,
) -> EvalReport:
    """Ranked evaluation of a trained bundle on the held-out positives.

    `include_valid_edges` lets validation edges join the message-passing
    graph at test time (off by default); test edges never do, which the
    leakage audit enforces on every call.
    """
    if split.test_neg is None or split.valid_neg is None:
        raise ValueError("split has no shared negatives; attach them before evaluating")
    positives = split.test_pos if on == "test" else split.valid_pos
    negatives = split.test_neg if on == "test" else split.valid_neg
    if len(positives) == 0:
        raise ValueError(f"cannot evaluate: the {on} split has no positives")
    mp_graph = message_passing_graph(g, split, include_valid=include_valid_edges)
    audit_no_leakage(mp_graph, split, allow_valid=include_valid_edges)
    index = build_training_index(mp_graph, bundle.scorer_cfg)
    started = time.perf_counter()
    ranks = score_and_rank(bundle.model, mp_graph, index, positives, negatives)
    wall = time.perf_counter() - started
    return report_from_ranks(
        ranks,
        num_negatives=len(negatives),
        ks=ks if ks is not None else bundle.train_cfg.ks,
        seed=bundle.seed,
        wall_time_s=wall,
    )


def _divergence_report(reason, epoch: int, model: LinkPredictor) -> str:
    norms = {
        name: float(np.max(np.abs(t.data))) if t.data.size else 0.0
        for name, t in model.parameters().items()
    }
    worst = sorted(norms.items(), key=lambda kv: -kv[1])[:5]
    lines = ", ".join(f"{k}={v:.3e}" for k, v in worst)
    return (
        f"training diverged at epoch {epoch}: {reason}; "
        f"largest parameter magnitudes: {lines}"
    )
