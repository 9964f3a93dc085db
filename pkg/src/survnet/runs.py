"""Building datasets from a RunConfig, executing replicates, and reading
and writing run directories."""

from __future__ import annotations

import csv
import json
import logging
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import datasets as ds
from . import importance, net, selection
from .config import RunConfig
from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}

REPORT_METRICS = ("initial_test_loss", "final_test_loss", "initial_test_error",
                  "final_test_error", "n_selected", "true_positives", "eta_hat_final",
                  "actual_fdr")


def _find(directory, stem):
    for name in (stem, stem + ".gz"):
        path = Path(directory) / name
        if path.exists():
            return path
    raise DataError(f"{stem}[.gz] not found in {directory}")


def load_mnist(directory, part):
    images, labels = MNIST_FILES[part]
    return ds.load_idx(_find(directory, images), _find(directory, labels))


def sim_spec(cfg, seed):
    return ds.SimSpec(cfg.scheme, n=cfg.n, p=cfg.p, p_prime=cfg.p_prime, seed=seed)


def build_dataset(cfg, seed):
    """Split (and optionally standardized) dataset for one replicate."""
    if cfg.source == "simulate":
        spec = sim_spec(cfg, seed)
        images = None
        if spec.scheme == "correlated_mean_shift" and cfg.mnist_dir:
            zeros = [d.X[d.y == 0] for d in (load_mnist(cfg.mnist_dir, "train"),
                                             load_mnist(cfg.mnist_dir, "test"))]
            images = np.vstack(zeros)
        data = ds.split(ds.simulate(spec, images=images), seed=seed)
    elif cfg.source == "csv":
        if not cfg.data_path:
            raise ConfigError("data_path is required for source = csv")
        data = ds.load_csv(cfg.data_path, cfg.target, cfg.has_header)
        sidecar = Path(cfg.data_path).with_suffix(".json")
        if sidecar.exists():
            meta = json.loads(sidecar.read_text())
            if meta.get("truth") is not None:
                data = replace(data, truth=np.asarray(meta["truth"], dtype=np.int64))
            if meta.get("grid"):
                data = replace(data, grid=tuple(meta["grid"]))
        data = ds.split(data, seed=seed)
    else:
        if not cfg.mnist_dir:
            raise ConfigError("mnist_dir is required for source = mnist")
        data = ds.mnist_pair(load_mnist(cfg.mnist_dir, "train"),
                             load_mnist(cfg.mnist_dir, "test"), digits=cfg.digit_pair())
    if cfg.standardize:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            data = ds.standardize(data)
    return data


def train_config(cfg, task):
    lr = cfg.learning_rate or (0.05 if task == "classification" else 0.01)
    return net.TrainConfig(batch_size=cfg.batch_size, learning_rate=lr,
                           max_epochs=cfg.max_epochs, patience=cfg.patience,
                           min_delta=cfg.min_delta)


def replicate_seeds(cfg):
    return [cfg.seed + k for k in range(cfg.replicates)]


def run_dir_for(cfg, seed):
    return Path(cfg.out) / f"run_{seed:04d}"


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj))


def _clean(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return value


def write_history_csv(path, history):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(selection.HISTORY_FIELDS)
        for rec in history:
            row = selection.history_row(rec)
            w.writerow(["" if row[k] is None else _clean(row[k]) for k in selection.HISTORY_FIELDS])


def write_heatmap_csv(path, grid, selected, scores):
    h, w = grid
    heat = np.zeros(h * w)
    heat[np.asarray(selected, dtype=np.int64)] = scores
    np.savetxt(path, heat.reshape(h, w), delimiter=",", fmt="%.17g")


def save_model(path, model, selected):
    arrays = {f"W{k}": W for k, W in enumerate(model.weights)}
    arrays.update({f"b{k}": b for k, b in enumerate(model.biases)})
    np.savez(path, selected=np.asarray(selected, dtype=np.int64),
             head=np.array(model.output_head), **arrays)


def load_model(path):
    with np.load(path) as z:
        k = sum(1 for name in z.files if name.startswith("W"))
        weights = [z[f"W{i}"] for i in range(k)]
        biases = [z[f"b{i}"] for i in range(k)]
        model = net.NetworkModel(weights, biases, output_head=str(z["head"]))
        return model, z["selected"]


def execute_replicate(cfg, seed):
    """Run one replicate end to end and write its directory. Returns the path."""
    out = run_dir_for(cfg, seed)
    out.mkdir(parents=True, exist_ok=True)
    run_cfg = replace(cfg, seed=seed, replicates=1, workers=1)
    (out / "config.json").write_text(json.dumps(run_cfg.to_dict(), indent=2, sort_keys=True))
    data = build_dataset(cfg, seed)
    result = selection.select_variables(
        data, hidden=cfg.hidden_layers(), train_cfg=train_config(cfg, data.task),
        eta_star=cfg.eta_star, epsilon=cfg.epsilon, q=cfg.q or None, seed=seed,
        score_kind=cfg.score_kind, scale_scores=cfg.scale_scores)
    report = result.report
    write_history_csv(out / "history.csv", report.history)
    importance.write_scores_csv(out / "importance.csv", report.selected, report.scores)
    if data.grid is not None:
        write_heatmap_csv(out / "heatmap.csv", data.grid, report.selected, report.scores)
    save_model(out / "model.npz", result.model, report.selected)
    doc = report.to_dict()
    doc["eta_hat_final"] = _clean(doc["eta_hat_final"])
    doc["seed"] = seed
    doc["truth"] = None if data.truth is None else data.truth.tolist()
    # report.json last: its presence marks a complete run directory
    (out / "report.json").write_text(json.dumps(doc, indent=2, default=_json_default))
    return out


def execute(cfg):
    seeds = replicate_seeds(cfg)
    if cfg.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(execute_replicate, [cfg] * len(seeds), seeds))
    return [execute_replicate(cfg, s) for s in seeds]


def load_run_config(run_dir):
    doc = json.loads((Path(run_dir) / "config.json").read_text())
    return RunConfig(**doc)


def evaluate_run(run_dir):
    """Re-evaluate a saved final model on its test split."""
    cfg = load_run_config(run_dir)
    model, selected = load_model(Path(run_dir) / "model.npz")
    data = build_dataset(cfg, cfg.seed)
    X, Y = data.part(ds.TEST, selected)
    loss, error = selection.evaluate(model, X, Y)
    return {"run_dir": str(run_dir), "test_loss": loss, "test_error": error,
            "n_selected": int(len(selected))}


def collect_runs(paths):
    """Map group name -> list of report dicts, skipping incomplete runs."""
    groups = {}
    for path in map(Path, paths):
        candidates = [path] if (path / "config.json").exists() else sorted(
            d for d in path.iterdir() if d.is_dir())
        group = path.parent.name if path in candidates else path.name
        for run in candidates:
            report = run / "report.json"
            if not report.exists():
                warnings.warn(f"skipping incomplete run directory {run}", stacklevel=2)
                continue
            groups.setdefault(group, []).append(json.loads(report.read_text()))
    for reports in groups.values():
        reports.sort(key=lambda r: r.get("seed", 0))
    return groups


def _as_float(value):
    if value is None:
        return float("nan")
    if value == "inf":
        return math.inf
    return float(value)


def aggregate(reports):
    """Mean and sample sd of each Table-1 metric across replicate reports.
    Test errors are reported in percent."""
    row = {"n_runs": len(reports)}
    for key in REPORT_METRICS:
        vals = np.array([_as_float(r.get(key)) for r in reports])
        if key.endswith("test_error"):
            vals = 100 * vals
        row[f"{key}_mean"] = float(np.mean(vals)) if len(vals) else float("nan")
        row[f"{key}_sd"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
    return row


TABLE_COLUMNS = {
    "initial_test_loss": "initial_loss",
    "final_test_loss": "final_loss",
    "initial_test_error": "initial_error_pct",
    "final_test_error": "final_error_pct",
    "n_selected": "n_original",
    "true_positives": "n_significant",
    "eta_hat_final": "estimated_fdr",
    "actual_fdr": "actual_fdr",
}


def write_table(path_or_file, groups):
    header = ["dataset", "n_runs"]
    for key in REPORT_METRICS:
        header += [f"{TABLE_COLUMNS[key]}_mean", f"{TABLE_COLUMNS[key]}_sd"]
    rows = []
    for name, reports in groups.items():
        agg = aggregate(reports)
        row = [name, agg["n_runs"]]
        for key in REPORT_METRICS:
            row += [agg[f"{key}_mean"], agg[f"{key}_sd"]]
        rows.append(row)
    own = isinstance(path_or_file, (str, Path))
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    finally:
        if own:
            f.close()
    return rows
