"""Seeded benchmark sweeps and CSV reports.

Every trial seed is a hash of ``(base_seed, sweep point, trial index, role)``
so adding trials or sweep points never changes existing trials. The data of
a trial (network and attributes) is shared by all methods.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .attributes import protocol_params, sample_attributes
from .baselines import detect_kmeans_only, detect_naive_mf
from .em import DetectConfig, detect
from .metrics import accuracy, modularity
from .network import ValidationError, dataset_path, load_gml, sample_four_group

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KINDS = ("four-group-sweep-zout", "four-group-sweep-sigma", "real-network-sweep-sigma", "single-run")
METHODS = ("bp-em", "naive-mf", "kmeans")
PRESET_TRIALS = {"paper": 500, "ci": 100}

_DEFAULTS = {
    "four-group-sweep-zout": dict(z_out=tuple(float(z) for z in range(1, 11)), sigma=(1.0, 3.0, 5.0)),
    "four-group-sweep-sigma": dict(z_out=(3.0, 5.0, 7.0), sigma=tuple(float(s) for s in range(1, 11))),
    "real-network-sweep-sigma": dict(z_out=(math.nan,), sigma=tuple(float(s) for s in range(1, 11))),
    "single-run": dict(z_out=(2.5,), sigma=(1.0,)),
}


@dataclass
class ExperimentConfig:
    kind: str = "four-group-sweep-zout"
    z_out: tuple = ()
    sigma: tuple = ()
    trials: int = PRESET_TRIALS["ci"]
    methods: tuple = METHODS
    seed: int = 0
    dataset: str | None = None
    spacing: float = 10.0
    workers: int = 1
    solver: DetectConfig = field(default_factory=DetectConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        defaults = _DEFAULTS[self.kind]
        self.z_out = tuple(float(z) for z in (self.z_out or defaults["z_out"]))
        self.sigma = tuple(float(s) for s in (self.sigma or defaults["sigma"]))
        self.methods = tuple(self.methods)
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise ValidationError(f"unknown methods {sorted(bad)}")
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if not self.z_out or not self.sigma or not self.methods:
            raise ValidationError("sweep lists must be non-empty")
        if self.kind == "real-network-sweep-sigma" and not self.dataset:
            raise ValidationError("real-network-sweep-sigma needs a dataset")
        if self.uses_dataset:
            self.z_out = (math.nan,)

    @property
    def uses_dataset(self) -> bool:
        return self.kind == "real-network-sweep-sigma" or (self.kind == "single-run" and bool(self.dataset))

    def points(self) -> list[tuple[float, float]]:
        return [(z, s) for z in self.z_out for s in self.sigma]

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        """Build from ``{"experiment": {...}, "solver": {...}}`` (e.g. a parsed TOML file)."""
        exp = dict(mapping.get("experiment", {}))
        preset = exp.pop("preset", None)
        if preset is not None:
            if preset not in PRESET_TRIALS:
                raise ValidationError(f"unknown preset {preset!r}")
            exp.setdefault("trials", PRESET_TRIALS[preset])
        unknown = set(exp) - set(cls.__dataclass_fields__) - {"solver"}
        if unknown:
            raise ValidationError(f"unknown experiment keys: {sorted(unknown)}")
        for key in ("z_out", "sigma", "methods"):
            if key in exp and not isinstance(exp[key], (list, tuple)):
                exp[key] = (exp[key],)
        return cls(**exp, solver=DetectConfig.from_mapping(mapping.get("solver", {})))


def load_config(path: str | Path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def trial_seed(base_seed: int, point, trial: int, role: str) -> int:
    key = json.dumps([int(base_seed), [repr(float(p)) for p in point], int(trial), role])
    return int.from_bytes(hashlib.blake2b(key.encode(), digest_size=8).digest(), "little")


@dataclass
class ExperimentResults:
    config: ExperimentConfig
    raw: list[dict]
    summary: list[dict]


def _trial_data(config: ExperimentConfig, point, trial, base_network, base_labels):
    z_out, sigma = point
    net_seed, attr_seed = np.random.SeedSequence(trial_seed(config.seed, point, trial, "data")).spawn(2)
    if config.uses_dataset:
        network, labels = base_network, base_labels
    else:
        network, labels = sample_four_group(z_out, net_seed)
    L = int(labels.max()) + 1
    d = sample_attributes(labels, protocol_params(L, sigma, config.spacing), attr_seed)
    return network.with_attributes(d), labels, L


def _run_method(method, network, L, seed, solver):
    if method == "kmeans":
        return detect_kmeans_only(network.attributes, L, seed, solver.kmeans_rounds), 0, True
    fn = detect if method == "bp-em" else detect_naive_mf
    res = fn(network, L, solver, seed)
    return res.labels, res.iterations, res.converged


def run_trial(config: ExperimentConfig, point, trial: int, base_network=None, base_labels=None) -> list[dict]:
    network, labels, L = _trial_data(config, point, trial, base_network, base_labels)
    true_q = modularity(labels, network)
    rows = []
    for method in config.methods:
        seed = trial_seed(config.seed, point, trial, method)
        row = dict(
            method=method, z_out=point[0], sigma=point[1], trial=trial, seed=seed,
            accuracy=math.nan, modularity=math.nan, true_modularity=true_q,
            iterations=0, converged=False, failed=False, error="",
        )
        try:
            pred, iters, conv = _run_method(method, network, L, seed, config.solver)
            row.update(
                accuracy=accuracy(pred, labels, L)[0], modularity=modularity(pred, network),
                iterations=int(iters), converged=bool(conv),
            )
        except Exception as exc:  # recorded, excluded from means
            log.warning("trial %s/%s/%s failed: %s", method, point, trial, exc)
            row.update(failed=True, error=f"{type(exc).__name__}: {exc}")
        rows.append(row)
    return rows


def _job(args):
    config, point, trial, net, labels = args
    return run_trial(config, point, trial, net, labels)


def _mean_se(values):
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(v))
    se = float(np.std(v, ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return mean, se


def summarize(raw: list[dict], config: ExperimentConfig) -> list[dict]:
    groups: dict = {}
    for r in raw:
        groups.setdefault((r["method"], repr(r["z_out"]), repr(r["sigma"])), []).append(r)
    out = []
    for rows in groups.values():
        method, z, s = rows[0]["method"], rows[0]["z_out"], rows[0]["sigma"]
        ok = [r for r in rows if not r["failed"]]
        acc, acc_se = _mean_se([r["accuracy"] for r in ok])
        q, q_se = _mean_se([r["modularity"] for r in ok])
        tq, tq_se = _mean_se([r["true_modularity"] for r in rows])
        out.append(dict(
            schema_version=SCHEMA_VERSION, kind=config.kind, dataset=config.dataset or "four-group",
            method=method, z_out=z, sigma=s, trials=len(ok), failures=len(rows) - len(ok),
            nonconverged=sum(1 for r in ok if not r["converged"] and r["method"] != "kmeans"),
            accuracy_mean=acc, accuracy_se=acc_se, modularity_mean=q, modularity_se=q_se,
            true_modularity_mean=tq, true_modularity_se=tq_se,
        ))
    out.sort(key=lambda r: (r["method"], _nan_key(r["z_out"]), r["sigma"]))
    return out


def _nan_key(x):
    return -math.inf if math.isnan(x) else x


def _mixed_key(v):
    return (1, v, 0.0) if isinstance(v, str) else (0, "", _nan_key(float(v)))


def run_experiment(config: ExperimentConfig) -> ExperimentResults:
    base_net = base_labels = None
    if config.uses_dataset:
        base_net, base_labels = load_gml(dataset_path(config.dataset))
        if base_labels is None:
            raise ValidationError(f"dataset {config.dataset!r} has no ground-truth 'value' fields")
    jobs = [(config, p, t, base_net, base_labels) for p in config.points() for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            chunks = list(pool.map(_job, jobs, chunksize=8))
    else:
        chunks = [_job(j) for j in jobs]
    raw = [row for chunk in chunks for row in chunk]  # ordered by (point, trial, method)
    return ExperimentResults(config, raw, summarize(raw, config))


# --------------------------------------------------------------------------
# reports

SUMMARY_COLUMNS = [
    "schema_version", "kind", "dataset", "method", "z_out", "sigma", "trials", "failures", "nonconverged",
    "accuracy_mean", "accuracy_se", "modularity_mean", "modularity_se", "true_modularity_mean", "true_modularity_se",
]
RAW_COLUMNS = [
    "method", "z_out", "sigma", "trial", "seed", "accuracy", "modularity", "true_modularity",
    "iterations", "converged", "failed", "error",
]
LONG_COLUMNS = ["schema_version", "kind", "method", "x_name", "x", "series_name", "series", "metric", "mean", "se", "n"]


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(r[k]) for k in columns})
    return buf.getvalue()


def long_rows(results: ExperimentResults) -> list[dict]:
    cfg = results.config
    if cfg.kind == "four-group-sweep-zout":
        x_name, series_name = "z_out", "sigma"
    elif cfg.kind == "four-group-sweep-sigma":
        x_name, series_name = "sigma", "z_out"
    elif cfg.uses_dataset:
        x_name, series_name = "sigma", "dataset"
    else:
        x_name, series_name = "z_out", "sigma"
    out = []
    truth_done = set()
    for r in results.summary:
        x = r[x_name]
        series = r[series_name]
        base = dict(schema_version=SCHEMA_VERSION, kind=cfg.kind, x_name=x_name, x=x, series_name=series_name, series=series)
        for metric in ("accuracy", "modularity"):
            out.append(dict(base, method=r["method"], metric=metric, mean=r[f"{metric}_mean"], se=r[f"{metric}_se"], n=r["trials"]))
        key = (r["z_out"], r["sigma"])
        if key not in truth_done:
            truth_done.add(key)
            out.append(dict(base, method="truth", metric="modularity", mean=r["true_modularity_mean"],
                            se=r["true_modularity_se"], n=r["trials"] + r["failures"]))
    out.sort(key=lambda r: (r["method"], r["metric"], _mixed_key(r["series"]), _mixed_key(r["x"])))
    return out


def emit_report(results: ExperimentResults, out_dir: str | Path) -> dict[str, Path]:
    """Write ``summary.csv``, ``plot_long.csv`` and ``trials.csv`` into ``out_dir``."""
    if not results.summary or not results.raw:
        raise ValueError("no results to report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "summary": (out / "summary.csv", _csv(results.summary, SUMMARY_COLUMNS)),
        "long": (out / "plot_long.csv", _csv(long_rows(results), LONG_COLUMNS)),
        "raw": (out / "trials.csv", _csv(results.raw, RAW_COLUMNS)),
    }
    for path, text in files.values():
        path.write_text(text)
    (out / "config.json").write_text(json.dumps(_config_dict(results.config), indent=2, sort_keys=True) + "\n")
    return {k: v[0] for k, v in files.items()}


def _config_dict(cfg: ExperimentConfig) -> dict:
    d = asdict(cfg)
    d["z_out"] = [None if math.isnan(z) else z for z in cfg.z_out]
    return d
