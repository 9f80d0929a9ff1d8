"""Command-line entry point.

Subcommands: preprocess, symmetry, heuristic, expressivity, train, eval,
ablate. Exit codes are a stable contract: 0 success, 1 verification failure,
2 usage error. Every run directory gets exactly one human-readable manifest
recording the resolved config, seed, and input hashes; reruns with an
identical manifest reproduce byte-identical metric CSVs (wall-clock times are
kept out of metrics.csv and live in results.csv instead).
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
import time
from datetime import datetime, timezone

from .encoders import EncoderConfig
from .generators import two_cliques
from .graph import Graph, load_graph
from .heuristics import HEURISTIC_NAMES, score as heuristic_score
from .models import LinkScorerConfig, PhiConfig
from .paths import build_index, index_stats, save_index
from .splits import load_negatives, make_split, with_shared_negatives
from .symmetry import AUTOMORPHISM_NODE_CAP, link_orbits, node_orbits
from .training import ModelBundle, TrainConfig, evaluate, train
from .verify import run_battery

# flat key = value config schema; None marks "no default, optional"
CONFIG_DEFAULTS: dict[str, object] = {
    "edges": None,  # required
    "features": None,
    "negatives_file": None,
    "scorer": None,  # required
    "encoder": "gcn",
    "layers": 2,
    "hidden": 64,
    "dropout": 0.0,
    "phi": "injective_sum",
    "phi_hidden": 64,
    "heads": 2,
    "phi_layers": 1,
    "max_path_len": 64,
    "rho_hidden": 64,
    "prediction_layers": 2,
    "lr": 1e-2,
    "weight_decay": 0.0,
    "epochs": 200,
    "batch_size": 1024,
    "eval_every": 5,
    "patience": 20,
    "eval_negatives": 100,
    "ks": "10,20",
    "train_ratio": 0.85,
    "valid_ratio": 0.05,
    "test_ratio": 0.10,
    "seed": 0,
    "f_max": 1024,
    "eval_include_valid_edges": False,
}
REQUIRED_KEYS = ("edges", "scorer")


class UsageError(ValueError):
    pass


def parse_config_file(path: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}: line {lineno}: expected 'key = value', got {line!r}")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()
    return raw


def resolve_config(path: str, overrides: list[str], seed_flag: int | None) -> dict:
    raw = parse_config_file(path)
    for item in overrides:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    unknown = set(raw) - set(CONFIG_DEFAULTS)
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    cfg: dict = {}
    for key, default in CONFIG_DEFAULTS.items():
        if key in raw:
            cfg[key] = _coerce(key, raw[key], default)
        else:
            cfg[key] = default
    for key in REQUIRED_KEYS:
        if cfg[key] is None:
            raise UsageError(f"missing config key: {key}")
    if seed_flag is not None:
        cfg["seed"] = seed_flag
    return cfg


def _coerce(key: str, value: str, default) -> object:
    if key in ("edges", "features", "negatives_file", "scorer", "encoder", "phi", "ks"):
        return value
    if isinstance(default, bool):
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise UsageError(f"config key {key}: expected a boolean, got {value!r}")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    return value


def _scorer_config(cfg: dict) -> LinkScorerConfig:
    phi_kinds_needed = cfg["scorer"] in ("sp4lp", "ablate_seq_only")
    phi = (
        PhiConfig(
            kind=cfg["phi"],
            hidden=cfg["phi_hidden"],
            heads=cfg["heads"],
            layers=cfg["phi_layers"],
            max_len=cfg["max_path_len"],
        )
        if phi_kinds_needed
        else None
    )
    encoder = (
        None
        if cfg["scorer"] == "ablate_seq_only"
        else EncoderConfig(
            kind=cfg["encoder"],
            layers=cfg["layers"],
            hidden=cfg["hidden"],
            dropout=cfg["dropout"],
        )
    )
    return LinkScorerConfig(
        scorer=cfg["scorer"],
        encoder=encoder,
        phi=phi,
        rho_hidden=cfg["rho_hidden"],
        prediction_layers=cfg["prediction_layers"],
    )


def _train_config(cfg: dict) -> TrainConfig:
    ks = tuple(int(k) for k in str(cfg["ks"]).split(",") if k.strip())
    return TrainConfig(
        lr=cfg["lr"],
        weight_decay=cfg["weight_decay"],
        epochs=cfg["epochs"],
        batch_size=cfg["batch_size"],
        eval_every=cfg["eval_every"],
        patience=cfg["patience"],
        eval_negatives=cfg["eval_negatives"],
        ks=ks,
    )


def _load_config_graph(cfg: dict) -> Graph:
    return load_graph(cfg["edges"], cfg["features"], f_max=cfg["f_max"])


def _prepare_split(g: Graph, cfg: dict):
    split = make_split(
        g, (cfg["train_ratio"], cfg["valid_ratio"], cfg["test_ratio"]), seed=cfg["seed"]
    )
    split = with_shared_negatives(g, split, cfg["eval_negatives"], seed=cfg["seed"] + 1_000_003)
    if cfg["negatives_file"]:
        from dataclasses import replace

        split = replace(split, test_neg=load_negatives(cfg["negatives_file"]))
    return split


# -- manifest / output helpers ---------------------------------------------------


def _sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: str, command: str, cfg: dict, artifacts: list[str]) -> None:
    lines = [
        "# pathlink run manifest",
        f"command = {command}",
        f"created_utc = {datetime.now(timezone.utc).isoformat()}",
    ]
    for key in sorted(cfg):
        lines.append(f"config.{key} = {cfg[key]}")
    for key in ("edges", "features", "negatives_file"):
        if cfg.get(key):
            lines.append(f"sha256.{key} = {_sha256_file(cfg[key])}")
    for name in artifacts:
        lines.append(f"artifact = {name}")
    with open(os.path.join(out_dir, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _metric_rows(dataset: str, scorer: str, seed: int, reports: dict[str, object], ks) -> list[str]:
    header = "dataset,scorer,seed,split,mrr," + ",".join(f"hits@{k}" for k in ks)
    rows = [header]
    for split_name, report in reports.items():
        hits = ",".join(_fmt(report.hits[k]) for k in ks)
        rows.append(f"{dataset},{scorer},{seed},{split_name},{_fmt(report.mrr)},{hits}")
    return rows


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# -- subcommands -----------------------------------------------------------------


def cmd_preprocess(args) -> int:
    g = load_graph(args.edges, args.features)
    if args.sources == "links":
        if not args.pairs:
            raise UsageError("--sources links requires --pairs <file>")
        pairs = load_negatives(args.pairs)  # same 'u v' line format
        sources = sorted({int(x) for x in pairs.ravel()})
    else:
        sources = None
    started = time.perf_counter()
    idx = build_index(g, sources=sources, n_jobs=args.jobs)
    elapsed = time.perf_counter() - started
    os.makedirs(args.path_cache, exist_ok=True)
    cache_file = save_index(idx, g, args.path_cache, sources=sources)
    stats = index_stats(idx)
    write_manifest(
        args.path_cache,
        "preprocess",
        {"edges": args.edges, "features": args.features, "sources": args.sources},
        [os.path.basename(cache_file)],
    )
    print(f"indexed {stats['sources']} sources in {elapsed:.2f}s")
    print(f"max distance: {stats['max_distance']}")
    print(f"unreachable pairs: {stats['unreachable_pairs']}")
    print(f"cache: {cache_file}")
    return 0


def cmd_symmetry(args) -> int:
    g = load_graph(args.edges, None)
    if g.n > AUTOMORPHISM_NODE_CAP:
        print(
            f"n = {g.n} exceeds the exact-orbit cap ({AUTOMORPHISM_NODE_CAP}); "
            "orbit tables skipped",
            file=sys.stderr,
        )
        return 1
    nodes = node_orbits(g)
    table = link_orbits(g)
    lines = ["kind,u,v,orbit"]
    lines += [f"node,{v},,{nodes[v]}" for v in range(g.n)]
    lines += [
        f"link,{u},{v},{table.orbit_of(u, v)}"
        for u in range(g.n)
        for v in range(u + 1, g.n)
    ]
    if args.out:
        _write_lines(args.out, lines)
    else:
        print("\n".join(lines))
    for spec_pair in args.assert_distinct or []:
        u, v, u2, v2 = (int(x) for x in spec_pair.replace(",", " ").split())
        if table.orbit_of(u, v) == table.orbit_of(u2, v2):
            print(f"pairs ({u},{v}) and ({u2},{v2}) share an orbit", file=sys.stderr)
            return 1
    return 0


def cmd_heuristic(args) -> int:
    g = load_graph(args.edges, None)
    pairs = load_negatives(args.pairs)
    idx = None
    if args.name == "SP":
        idx = build_index(g, sources=sorted({int(min(u, v)) for u, v in pairs}))
    lines = ["u,v,score"]
    for u, v in pairs:
        s = heuristic_score(
            g, idx, args.name, int(u), int(v), katz_beta=args.katz_beta, katz_lmax=args.katz_lmax
        )
        lines.append(f"{u},{v},{_fmt(s.value)}")
    if args.out:
        _write_lines(args.out, lines)
    else:
        print("\n".join(lines))
    return 0


def cmd_expressivity(args) -> int:
    extra = load_graph(args.edges, None) if args.edges else None
    results = run_battery(extra_graph=extra)
    width = max(len(r.name) for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name:<{width}}  {r.detail}")
        failures += 0 if r.passed else 1
    print(f"{len(results) - failures}/{len(results)} claims hold")
    return 0 if failures == 0 else 1


def cmd_train(args) -> int:
    cfg = resolve_config(args.config, args.set or [], args.seed)
    g = _load_config_graph(cfg)
    split = _prepare_split(g, cfg)
    scorer_cfg = _scorer_config(cfg)
    train_cfg = _train_config(cfg)
    started = time.perf_counter()
    bundle, curve = train(g, split, scorer_cfg, train_cfg, seed=cfg["seed"])
    wall = time.perf_counter() - started
    include_valid = bool(cfg["eval_include_valid_edges"])
    reports = {
        "valid": evaluate(bundle, g, split, on="valid"),
        "test": evaluate(bundle, g, split, on="test", include_valid_edges=include_valid),
    }
    _emit_run_outputs(args.out, "train", cfg, bundle, curve, reports, wall)
    print(f"test MRR { _fmt(reports['test'].mrr) }  (train wall {wall:.1f}s)")
    return 0


def _emit_run_outputs(out_dir, command, cfg, bundle, curve, reports, wall) -> None:
    os.makedirs(out_dir, exist_ok=True)
    dataset = os.path.splitext(os.path.basename(cfg["edges"]))[0]
    ks = bundle.train_cfg.ks
    metric_lines = _metric_rows(dataset, cfg["scorer"], cfg["seed"], reports, ks)
    _write_lines(os.path.join(out_dir, "metrics.csv"), metric_lines)
    result_lines = [metric_lines[0] + ",wall_s"]
    for line, report in zip(metric_lines[1:], reports.values()):
        result_lines.append(f"{line},{report.wall_time_s + (wall or 0.0):.3f}")
    _write_lines(os.path.join(out_dir, "results.csv"), result_lines)
    artifacts = ["metrics.csv", "results.csv"]
    if bundle is not None:
        bundle.save(os.path.join(out_dir, "checkpoint.bin"))
        artifacts.append("checkpoint.bin")
    if curve is not None:
        _write_lines(
            os.path.join(out_dir, "loss_curve.csv"),
            ["epoch,loss"] + [f"{i},{_fmt(l)}" for i, l in enumerate(curve)],
        )
        artifacts.append("loss_curve.csv")
    write_manifest(out_dir, command, cfg, artifacts)


def cmd_eval(args) -> int:
    cfg = resolve_config(args.config, args.set or [], args.seed)
    g = _load_config_graph(cfg)
    split = _prepare_split(g, cfg)
    bundle = ModelBundle.load(args.checkpoint)
    include_valid = bool(cfg["eval_include_valid_edges"])
    reports = {
        "valid": evaluate(bundle, g, split, on="valid"),
        "test": evaluate(bundle, g, split, on="test", include_valid_edges=include_valid),
    }
    _emit_run_outputs(args.out, "eval", cfg, bundle, None, reports, 0.0)
    print(f"test MRR { _fmt(reports['test'].mrr) }")
    return 0


ABLATION_VARIANTS = ("sp4lp", "ablate_seq_only", "ablate_len_only")


def cmd_ablate(args) -> int:
    cfg = resolve_config(args.config, args.set or [], args.seed)
    if cfg["scorer"] != "sp4lp":
        raise UsageError("ablate expects the base config to use scorer = sp4lp")
    g = _load_config_graph(cfg)
    split = _prepare_split(g, cfg)
    train_cfg = _train_config(cfg)
    os.makedirs(args.out, exist_ok=True)
    dataset = os.path.splitext(os.path.basename(cfg["edges"]))[0]
    ks = train_cfg.ks
    lines = ["dataset,scorer,seed,split,mrr," + ",".join(f"hits@{k}" for k in ks)]
    for variant in ABLATION_VARIANTS:
        vcfg = dict(cfg)
        vcfg["scorer"] = variant
        scorer_cfg = _scorer_config(vcfg)
        bundle, _ = train(g, split, scorer_cfg, train_cfg, seed=cfg["seed"])
        report = evaluate(bundle, g, split, on="test")
        hits = ",".join(_fmt(report.hits[k]) for k in ks)
        lines.append(f"{dataset},{variant},{cfg['seed']},test,{_fmt(report.mrr)},{hits}")
        print(f"{variant}: test MRR {_fmt(report.mrr)}")
    _write_lines(os.path.join(args.out, "ablation.csv"), lines)
    write_manifest(args.out, "ablate", cfg, ["ablation.csv"])
    return 0


def make_toy_edge_file(path: str, clique: int = 8) -> None:
    """Write the separable two-clique toy task used in smoke tests."""
    g = two_cliques(clique, bridges=2)
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


# -- argument parsing --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathlink",
        description="Link prediction with message-passing encoders and shortest-path sequences",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="build and cache the shortest-path index")
    p.add_argument("--edges", required=True)
    p.add_argument("--features", default=None)
    p.add_argument("--path-cache", required=True)
    p.add_argument("--sources", choices=("all", "links"), default="all")
    p.add_argument("--pairs", default=None, help="pair file for --sources links")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(fn=cmd_preprocess)

    p = sub.add_parser("symmetry", help="print node/link orbit tables as CSV")
    p.add_argument("--edges", required=True)
    p.add_argument("--out", default=None)
    p.add_argument(
        "--assert-distinct",
        action="append",
        metavar="U,V,U2,V2",
        help="exit 1 if the two pairs share a link orbit",
    )
    p.set_defaults(fn=cmd_symmetry)

    p = sub.add_parser("heuristic", help="score pairs with a classical heuristic")
    p.add_argument("--edges", required=True)
    p.add_argument("--name", required=True, choices=HEURISTIC_NAMES)
    p.add_argument("--pairs", required=True)
    p.add_argument("--katz-beta", type=float, default=0.005)
    p.add_argument("--katz-lmax", type=int, default=5)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_heuristic)

    p = sub.add_parser("expressivity", help="run the built-in separation-claim battery")
    p.add_argument("--edges", default=None, help="optional extra graph to orbit-check")
    p.set_defaults(fn=cmd_expressivity)

    for name, fn in (("train", cmd_train), ("eval", cmd_eval), ("ablate", cmd_ablate)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--out", required=True)
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="config override")
        if name == "eval":
            p.add_argument("--checkpoint", required=True)
        p.set_defaults(fn=fn)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (UsageError, FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
