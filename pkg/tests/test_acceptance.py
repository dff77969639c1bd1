"""Acceptance gate: one test per release criterion.

Each test prints a single PASS/FAIL line through the terminal reporter
so the verdicts are visible in a normal ``pytest -v`` run.
"""

import itertools
import json
import os
import time
from dataclasses import replace

import numpy as np
import pytest

from inexad.data import gen_synthetic, materialize
from inexad.harness import ExperimentConfig, run_experiment
from inexad.metrics import empirical_auc, empirical_inexact_auc
from inexad.network import finite_diff_grad
from inexad.scorer import ae_from_vector, ae_to_vector, score_batch
from inexad.training import TrainConfig, mode_objective, objective_grad, train
from .conftest import KINK_MARGIN, REL_TOL, ABS_TOL, min_preactivation, small_ae

_reporter = None


@pytest.fixture(autouse=True)
def _capture_reporter(request):
    global _reporter
    _reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    yield


def verdict(num, description, passed, detail=""):
    line = f"[criterion {num}] {'PASS' if passed else 'FAIL'}: {description}"
    if detail:
        line += f" ({detail})"
    if _reporter is not None:
        _reporter.write_line("")
        _reporter.write_line(line)
    else:
        print(line)
    assert passed, line


# ---------------------------------------------------------------------------
# Criterion 1: gradient correctness against finite differences


def _draw_grad_config(rng):
    """A small random network plus batches with safe margins.

    Draws are rejected until every hidden pre-activation clears the ReLU
    kink guard and every multi-instance set has an argmax margin >= 1e-2,
    so the objective is smooth around the evaluation point.
    """
    lam = float(rng.choice([1e-3, 1e-1, 1.0, 10.0]))
    while True:
        params = small_ae(rng, dim=3, hidden=5, code=2)
        sets = [rng.uniform(-1, 1, size=(int(rng.integers(1, 4)), 3))
                for _ in range(int(rng.integers(1, 4)))]
        normals = rng.uniform(-1, 1, size=(int(rng.integers(2, 6)), 3))
        all_x = np.vstack(sets + [normals])
        if min_preactivation(params, all_x) < KINK_MARGIN:
            continue
        margins_ok = True
        for s in sets:
            scores = np.sort(score_batch(params, s))
            if scores.size >= 2 and scores[-1] - scores[-2] < 1e-2:
                margins_ok = False
        if margins_ok:
            return params, sets, normals, lam


def test_criterion_1_gradient_correctness():
    rng = np.random.default_rng(1001)
    start = time.perf_counter()
    n_coords = 0
    worst = 0.0
    ok = True
    for _ in range(22):
        params, sets, normals, lam = _draw_grad_config(rng)
        dims = params.dims

        def loss(theta):
            p = ae_from_vector(theta, dims)
            return mode_objective("proposed", p, sets, normals, lam)

        analytic = objective_grad(params, sets, normals, lam)
        numeric = finite_diff_grad(loss, ae_to_vector(params))
        tol = np.maximum(ABS_TOL, REL_TOL * np.abs(numeric))
        gap = np.abs(analytic - numeric)
        ok = ok and bool(np.all(gap <= tol))
        worst = max(worst, float(np.max(gap / np.maximum(tol, 1e-300))))
        n_coords += analytic.size
    elapsed = time.perf_counter() - start
    verdict(1, "objective gradient matches finite differences",
            ok and elapsed < 60.0,
            f"22 configs, {n_coords} coordinates, worst gap/tol {worst:.2e}, "
            f"{elapsed:.1f}s")


# ---------------------------------------------------------------------------
# Criterion 2: set-level AUC on singleton sets reduces to the plain AUC


def test_criterion_2_singleton_reduction():
    rng = np.random.default_rng(1002)
    ok = True
    for _ in range(100):
        a = rng.normal(size=int(rng.integers(1, 12)))
        n = rng.normal(size=int(rng.integers(1, 12)))
        ok = ok and empirical_inexact_auc([[v] for v in a], n) == empirical_auc(a, n)
    verdict(2, "singleton-set AUC equals plain AUC bitwise", ok, "100 draws")


# ---------------------------------------------------------------------------
# Criterion 3: exhaustive metric oracle on a 5-value alphabet


def test_criterion_3_metric_oracle():
    # Both the metric and its defining double sum are invariant to the
    # order of sets, of members within a set, and of normal scores, so
    # the configuration space is enumerated up to those orderings
    # (multisets); order invariance itself is checked separately below.
    alphabet = (0.0, 0.25, 0.5, 0.75, 1.0)
    start = time.perf_counter()

    set_multisets = [c for size in (1, 2, 3)
                     for c in itertools.combinations_with_replacement(alphabet, size)]
    set_arrays = [np.array(c) for c in set_multisets]
    set_maxima = [max(c) for c in set_multisets]

    collections = [c for k in (1, 2, 3)
                   for c in itertools.combinations_with_replacement(
                       range(len(set_multisets)), k)]

    normal_multisets = [c for size in (1, 2, 3, 4)
                        for c in itertools.combinations_with_replacement(
                            alphabet, size)]

    ok = True
    checked = 0
    for norm in normal_multisets:
        n_arr = np.array(norm)
        j = len(norm)
        # strict wins of each alphabet value against this normal multiset
        below = {v: sum(1 for x in norm if v > x) for v in alphabet}
        for coll in collections:
            sets = [set_arrays[i] for i in coll]
            wins = sum(below[set_maxima[i]] for i in coll)
            oracle = float(wins) / (len(coll) * j)
            if empirical_inexact_auc(sets, n_arr) != oracle:
                ok = False
            checked += 1
        if not ok:
            break

    # order invariance over random shufflings of an otherwise fixed draw
    rng = np.random.default_rng(1003)
    for _ in range(200):
        sets = [rng.choice(alphabet, size=rng.integers(1, 4))
                for _ in range(int(rng.integers(1, 4)))]
        norms = rng.choice(alphabet, size=int(rng.integers(1, 5)))
        base = empirical_inexact_auc(sets, norms)
        shuffled = [rng.permutation(sets[i])
                    for i in rng.permutation(len(sets))]
        ok = ok and base == empirical_inexact_auc(shuffled, rng.permutation(norms))

    elapsed = time.perf_counter() - start
    verdict(3, "set-level AUC equals brute-force double loop exhaustively", ok,
            f"{checked} configurations, {elapsed:.0f}s")


# ---------------------------------------------------------------------------
# Criteria 4 and 6 share one full synthetic experiment


@pytest.fixture(scope="session")
def synthetic_report():
    config = ExperimentConfig(modes=("proposed", "ae", "mil", "sae"),
                              n_repeats=10, seed=0)
    start = time.perf_counter()
    report = run_experiment(config)
    report.elapsed = time.perf_counter() - start
    return report


def test_criterion_4_synthetic_reproduction(synthetic_report):
    means = {m: res.mean for m, res in synthetic_report.modes.items()}
    ok = (means["proposed"] >= 0.93
          and all(means["proposed"] > means[m] for m in ("ae", "mil", "sae"))
          and 0.80 <= means["ae"] <= 1.0
          and synthetic_report.elapsed < 900.0)
    detail = ", ".join(f"{m}={means[m]:.4f}" for m in ("proposed", "ae", "mil", "sae"))
    verdict(4, "synthetic mean test AUCs reproduce the expected ordering", ok,
            f"{detail}, {synthetic_report.elapsed:.0f}s")


def test_criterion_5_objective_descent():
    ok = True
    drops = []
    for seed in range(10):
        ds, split = gen_synthetic(np.random.default_rng(seed))
        train_data, val_data, _ = materialize(ds, split)
        config = TrainConfig(lam=1.0, mode="proposed", max_epochs=50,
                             patience=None, rng_seed=seed)
        res = train(train_data, val_data, config)
        first = res.history[0][1]
        last = res.history[50][1]
        ok = ok and last < first
        drops.append(first - last)
    verdict(5, "full-data objective at epoch 50 below epoch 0 for all seeds", ok,
            f"min drop {min(drops):.4f}")


def test_criterion_6_lambda_sensitivity(synthetic_report):
    config = ExperimentConfig(modes=("proposed",), n_repeats=10, seed=0,
                              fixed_lambda=0.0)
    lam0_mean = run_experiment(config).modes["proposed"].mean
    grid_mean = synthetic_report.modes["proposed"].mean
    mil_mean = synthetic_report.modes["mil"].mean
    ok = grid_mean >= lam0_mean and grid_mean >= mil_mean
    verdict(6, "grid-selected lambda beats lambda=0 and the ranking-only mode",
            ok, f"grid={grid_mean:.4f}, lam0={lam0_mean:.4f}, mil={mil_mean:.4f}")


# ---------------------------------------------------------------------------
# Criterion 7: optional local diabetes-dataset spot check


def _find_optional_csv():
    candidates = [os.environ.get("INEXAD_PIMA_CSV")]
    here = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
    candidates += [os.path.join(here, "data", "pima.csv"),
                   os.path.join(here, "pima.csv")]
    for path in candidates:
        if path and os.path.exists(path):
            return path
    return None


def test_criterion_7_optional_dataset_check():
    path = _find_optional_csv()
    if path is None:
        if _reporter is not None:
            _reporter.write_line("")
            _reporter.write_line(
                "[criterion 7] SKIP: optional dataset CSV not present")
        pytest.skip("optional dataset CSV not present")
    config = ExperimentConfig(dataset="csv", csv_path=path,
                              label_col=os.environ.get("INEXAD_PIMA_LABEL",
                                                       "label"),
                              modes=("proposed",), n_repeats=10, seed=0)
    mean = run_experiment(config).modes["proposed"].mean
    verdict(7, "diabetes-dataset mean test AUC within 0.10 of 0.713",
            abs(mean - 0.713) <= 0.10, f"mean={mean:.4f}")


# ---------------------------------------------------------------------------
# Criterion 8: byte-identical summaries across reruns


def test_criterion_8_determinism():
    config = ExperimentConfig(modes=("proposed", "ae"), n_repeats=2, seed=3,
                              fixed_lambda=1.0, max_epochs=20, patience=None)

    def summary():
        report = run_experiment(replace(config))
        return json.dumps(report.to_dict(include_timing=False),
                          sort_keys=True).encode()

    first, second = summary(), summary()
    verdict(8, "identical configs produce byte-identical summaries",
            first == second, f"{len(first)} bytes")
