"""Command line: ``attrsbm {generate,detect,sweep,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .attributes import protocol_params, sample_attributes
from .baselines import detect_kmeans_only, detect_naive_mf
from .em import DetectConfig, detect
from .experiments import KINDS, METHODS, PRESET_TRIALS, ExperimentConfig, emit_report, load_config, run_experiment
from .metrics import evaluate
from .network import (
    dataset_path,
    format_edge_list,
    load_gml,
    parse_edge_list,
    read_attributes_csv,
    read_labels_csv,
    sample_four_group,
    write_attributes_csv,
    write_labels_csv,
)


def _load_network(args):
    """(network, truth-or-None) from --dataset or --edges (+ optional --attributes)."""
    if args.dataset:
        network, truth = load_gml(dataset_path(args.dataset))
    elif args.edges:
        network, truth = parse_edge_list(Path(args.edges).read_text()), None
    else:
        raise SystemExit("need --dataset or --edges")
    if getattr(args, "attributes", None):
        network = network.with_attributes(read_attributes_csv(Path(args.attributes).read_text(), network))
    if getattr(args, "truth", None):
        truth = read_labels_csv(Path(args.truth).read_text(), network)
    return network, truth


def cmd_generate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    net_seed, attr_seed = np.random.SeedSequence(args.seed).spawn(2)
    if args.dataset:
        network, labels = load_gml(dataset_path(args.dataset))
        if labels is None:
            raise SystemExit("dataset has no ground-truth labels to generate attributes from")
    else:
        network, labels = sample_four_group(args.z_out, net_seed)
    L = int(labels.max()) + 1
    d = sample_attributes(labels, protocol_params(L, args.sigma, args.spacing), attr_seed)
    (out / "edges.txt").write_text(format_edge_list(network))
    (out / "attributes.csv").write_text(write_attributes_csv(network, d))
    (out / "labels.csv").write_text(write_labels_csv(network, labels))
    print(f"{network.n_vertices} vertices, {network.n_edges} edges, {L} communities -> {out}")
    return 0


def _solver_config(args) -> DetectConfig:
    if args.config:
        return DetectConfig.from_mapping(load_config(args.config).get("solver", {}))
    return DetectConfig()


def cmd_detect(args) -> int:
    network, truth = _load_network(args)
    if args.sigma is not None:
        if truth is None:
            raise SystemExit("--sigma needs ground-truth labels (GML 'value' or --truth)")
        L_true = int(truth.max()) + 1
        network = network.with_attributes(sample_attributes(truth, protocol_params(L_true, args.sigma), args.seed))
    L = args.L or (int(truth.max()) + 1 if truth is not None else None)
    if L is None:
        raise SystemExit("--L is required when no ground truth is available")
    cfg = _solver_config(args)
    summary = {"method": args.method, "n_vertices": network.n_vertices, "n_edges": network.n_edges, "L": L}
    beliefs = None
    if args.method == "kmeans":
        labels = detect_kmeans_only(network.attributes, L, args.seed, cfg.kmeans_rounds)
    else:
        fn = detect if args.method == "bp-em" else detect_naive_mf
        res = fn(network, L, cfg, args.seed)
        labels, beliefs = res.labels, res.beliefs
        summary.update(
            iterations=res.iterations,
            converged=res.converged,
            log_likelihood=res.log_likelihood,
            params={k: getattr(res.params, k).tolist() for k in ("gamma", "gamma_prime", "mu", "sigma")},
        )
    if truth is not None:
        rep = evaluate(labels, truth, network, L)
        summary.update(accuracy=rep.accuracy, modularity=rep.modularity)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "labels.csv").write_text(write_labels_csv(network, labels))
        if beliefs is not None:
            lines = ["vertex_id," + ",".join(f"b{l}" for l in range(L))]
            lines += [f"{v}," + ",".join(repr(float(x)) for x in row) for v, row in zip(network.ids(), beliefs)]
            (out / "beliefs.csv").write_text("\n".join(lines) + "\n")
        (out / "result.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps({k: v for k, v in summary.items() if k != "params"}))
    return 0


def cmd_sweep(args) -> int:
    mapping = load_config(args.config) if args.config else {}
    exp = mapping.setdefault("experiment", {})
    overrides = {
        "kind": args.kind,
        "trials": args.trials,
        "seed": args.seed,
        "dataset": args.dataset,
        "methods": args.method,
        "z_out": args.z_out,
        "sigma": args.sigma,
        "workers": args.workers,
        "preset": args.preset,
    }
    exp.update({k: v for k, v in overrides.items() if v is not None})
    config = ExperimentConfig.from_mapping(mapping)
    results = run_experiment(config)
    paths = emit_report(results, args.out)
    for r in results.summary:
        z = "" if r["z_out"] != r["z_out"] else f" z_out={r['z_out']:g}"
        print(
            f"{r['method']:<9}{z} sigma={r['sigma']:g}  acc={r['accuracy_mean']:.3f}±{r['accuracy_se']:.3f}"
            f"  Q={r['modularity_mean']:.3f}  Q*={r['true_modularity_mean']:.3f}  n={r['trials']} fail={r['failures']}"
        )
    print("wrote " + ", ".join(str(p) for p in paths.values()))
    return 0


def cmd_eval(args) -> int:
    network, truth = _load_network(args)
    pred = read_labels_csv(Path(args.labels).read_text(), network)
    if truth is None:
        raise SystemExit("need ground truth (--truth or a GML dataset with 'value')")
    L = args.L or max(int(truth.max()), int(pred.max())) + 1
    rep = evaluate(pred, truth, network, L)
    out = {"accuracy": rep.accuracy, "modularity": rep.modularity, "best_permutation": rep.best_permutation.tolist()}
    print(json.dumps(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="attrsbm", description="Community detection on attributed networks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a four-group network or attributes for a dataset")
    g.add_argument("--z-out", type=float, default=2.5)
    g.add_argument("--sigma", type=float, default=1.0)
    g.add_argument("--spacing", type=float, default=10.0)
    g.add_argument("--dataset")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="run one detector on a network")
    d.add_argument("--dataset", help="bundled name (karate, football) or GML path")
    d.add_argument("--edges", help="edge-list file")
    d.add_argument("--attributes", help="CSV vertex_id,value")
    d.add_argument("--truth", help="CSV vertex_id,label")
    d.add_argument("--sigma", type=float, help="generate protocol attributes from the ground truth")
    d.add_argument("--L", type=int)
    d.add_argument("--method", choices=METHODS, default="bp-em")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--config", help="TOML file; [solver] section is used")
    d.add_argument("--out")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("sweep", help="run a benchmark sweep and write CSV reports")
    s.add_argument("--config", help="TOML file with [experiment] and [solver] sections")
    s.add_argument("--kind", choices=KINDS)
    s.add_argument("--preset", choices=sorted(PRESET_TRIALS))
    s.add_argument("--trials", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--dataset")
    s.add_argument("--method", action="append", choices=METHODS)
    s.add_argument("--z-out", type=float, nargs="+")
    s.add_argument("--sigma", type=float, nargs="+")
    s.add_argument("--workers", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("eval", help="accuracy and modularity of a labeling")
    e.add_argument("--labels", required=True)
    e.add_argument("--truth")
    e.add_argument("--dataset")
    e.add_argument("--edges")
    e.add_argument("--L", type=int)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
