"""Experiment orchestration: repeated splits, lambda selection, report emission.

One experiment = n_repeats independent split/train/evaluate rounds per
mode, each seeded as base_seed + repeat so any single round can be
replayed in isolation.  Test groups are singletons (exact labels), so
the reported test AUC is the set-level AUC over singleton sets, which
coincides with the plain pairwise AUC.
"""

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .data import gen_synthetic, load_csv, make_splits, materialize, preprocess
from .metrics import empirical_auc, roc_curve
from .scorer import score_batch
from .training import (
    DEFAULT_LAMBDA_GRID,
    MODES,
    TrainConfig,
    grid_search,
    train,
    write_history,
)


@dataclass
class ExperimentConfig:
    dataset: str = "synthetic"  # "synthetic" or "csv"
    csv_path: str = None
    label_col: str = "label"
    modes: tuple = ("proposed",)
    n_repeats: int = 10
    seed: int = 0
    fixed_lambda: float = None  # None -> grid search where lambda matters
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    max_epochs: int = 1000
    patience: int = 100
    out_dir: str = "results"
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.dataset not in ("synthetic", "csv"):
            raise ValueError(f"unknown dataset kind {self.dataset!r}")
        if self.dataset == "csv" and not self.csv_path:
            raise ValueError("dataset 'csv' requires a csv_path")
        if self.n_repeats < 1:
            raise ValueError(f"n_repeats must be >= 1, got {self.n_repeats}")
        for m in self.modes:
            if m not in MODES:
                raise ValueError(f"unknown mode {m!r}")


@dataclass
class ModeResult:
    aucs: list
    chosen_lambdas: list
    seconds: list

    @property
    def mean(self):
        return float(np.mean(self.aucs))

    @property
    def stderr(self):
        if len(self.aucs) < 2:
            return 0.0
        return float(np.std(self.aucs, ddof=1) / math.sqrt(len(self.aucs)))


@dataclass
class EvaluationReport:
    dataset_name: str
    n_repeats: int
    seed: int
    modes: dict  # mode -> ModeResult
    roc_curves: dict = field(default_factory=dict)  # (mode, repeat) -> RocCurve
    histories: dict = field(default_factory=dict)  # (mode, repeat, lam) -> history

    def to_dict(self, include_timing=True):
        out = {
            "dataset": self.dataset_name,
            "n_repeats": self.n_repeats,
            "seed": self.seed,
            "modes": {},
        }
        for mode, res in sorted(self.modes.items()):
            entry = {
                "aucs": [float(a) for a in res.aucs],
                "chosen_lambdas": [
                    None if l is None else float(l) for l in res.chosen_lambdas
                ],
                "mean_auc": res.mean,
                "stderr_auc": res.stderr,
            }
            if include_timing:
                entry["seconds"] = [float(s) for s in res.seconds]
            out["modes"][mode] = entry
        return out


def _uses_grid(mode, config):
    return mode in ("proposed", "sae") and config.fixed_lambda is None


def _lambda_for(mode, config):
    if mode == "ae":
        return 0.0
    if mode == "mil":
        return 1.0  # unused by the mil objective
    if config.fixed_lambda is not None:
        return float(config.fixed_lambda)
    return None


def run_experiment(config):
    """Run every (repeat, mode) round and aggregate test AUCs."""
    base_ds = None
    if config.dataset == "csv":
        base_ds = preprocess(load_csv(config.csv_path, config.label_col))

    tc = replace(
        config.train_config,
        max_epochs=config.max_epochs,
        patience=config.patience,
        lambda_grid=tuple(config.lambda_grid),
    )

    report = EvaluationReport(
        dataset_name="synthetic" if config.dataset == "synthetic" else base_ds.name,
        n_repeats=config.n_repeats,
        seed=config.seed,
        modes={m: ModeResult(aucs=[], chosen_lambdas=[], seconds=[])
               for m in config.modes},
    )

    for r in range(config.n_repeats):
        seed_r = config.seed + r
        rng = np.random.default_rng(seed_r)
        if config.dataset == "synthetic":
            ds, split = gen_synthetic(rng)
        else:
            ds, split = base_ds, make_splits(base_ds, rng)
        train_data, val_data, test_data = materialize(ds, split)

        for mode in config.modes:
            t0 = time.perf_counter()
            cfg = replace(tc, mode=mode, rng_seed=seed_r)
            if _uses_grid(mode, config):
                results = grid_search(train_data, val_data, cfg)
                best = results[0][1]
                for _, res in results[1:]:
                    if res.best_val_metric > best.best_val_metric:
                        best = res
                for lam, res in results:
                    report.histories[(mode, r, lam)] = res.history
            else:
                lam = _lambda_for(mode, config)
                best = train(train_data, val_data, replace(cfg, lam=lam))
                report.histories[(mode, r, lam)] = best.history
            elapsed = time.perf_counter() - t0

            a_scores = score_batch(best.best_params, test_data.anomalies)
            n_scores = score_batch(best.best_params, test_data.normals)
            auc = empirical_auc(a_scores, n_scores)
            report.modes[mode].aucs.append(auc)
            # mil ignores lambda entirely; don't report a fake choice
            report.modes[mode].chosen_lambdas.append(
                None if mode == "mil" else best.chosen_lambda)
            report.modes[mode].seconds.append(elapsed)
            report.roc_curves[(mode, r)] = roc_curve(a_scores, n_scores)

    return report


def emit_report(report, out_dir):
    """Write summary.json plus per-mode AUC, ROC, and history CSVs."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    path = os.path.join(out_dir, "summary.json")
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)

    for mode, res in sorted(report.modes.items()):
        path = os.path.join(out_dir, f"auc_{mode}.csv")
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["repeat", "test_auc", "chosen_lambda"])
            for r, (auc, lam) in enumerate(zip(res.aucs, res.chosen_lambdas)):
                writer.writerow([r, repr(float(auc)),
                                 "" if lam is None else repr(float(lam))])
        written.append(path)

    for (mode, r), curve in sorted(report.roc_curves.items()):
        path = os.path.join(out_dir, f"roc_{mode}_{r}.csv")
        curve.to_csv(path)
        written.append(path)

    for (mode, r, lam), history in sorted(
            report.histories.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        path = os.path.join(out_dir, f"history_{mode}_{r}_{lam:g}.csv")
        write_history(path, history)
        written.append(path)

    return written
