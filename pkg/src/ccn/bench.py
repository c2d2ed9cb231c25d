"""Reproducible benchmark suites emitting plot-ready CSV artifacts.

The table1 suite pits the network against the stagewise baselines across
the built-in designs and all five metrics, with per-method and per-metric
hyperparameter tuning on each repetition (the scoring metric matches the
evaluation metric).  The figure6 suite runs the measure-validation
experiment over random processes.  Every repetition derives its streams
from ``(seed, indices)``, so outputs are byte-identical for a given seed
regardless of the parallelism level.
"""

import os
import time
from dataclasses import replace
from multiprocessing import get_context

import numpy as np

from . import estimators
from .dependency import (
    MEASURE_COLUMNS,
    ExperimentConfig,
    run_experiment_dgp,
    summarize_experiment,
)
from .errors import ValidationError
from .io import format_real, write_manifest
from .metrics import METRICS, wilcoxon_signed_rank
from .model import LossSpec
from .numkit import derive_seed, spawn_rng
from .simgen import builtin_design, generate
from .tuning import GridSpec, cv_grid_table, select_best, _fit_by_kind, _point_config

__all__ = ["run_table1", "run_figure6", "TABLE1_DESIGNS", "TABLE1_METHODS",
           "ALL_METRICS"]

TABLE1_DESIGNS = ("strong", "weak", "reversed", "sequential", "increased")
TABLE1_METHODS = ("ccn", "br", "cc")
ALL_METRICS = ("hamming", "zero_one", "nll", "micro_f1", "macro_f1")

_KIND_BY_METHOD = {
    "ccn": "ccn",
    "br": "br",
    "cc": "cc-binary",
    "cc-probability": "cc-probability",
}


def _run_tasks(fn, tasks, jobs):
    if jobs <= 1:
        return [fn(task) for task in tasks]
    with get_context("fork").Pool(jobs) as pool:
        return pool.map(fn, tasks, chunksize=1)


def _table1_task(task):
    (seed, d_idx, design_name, rep, methods, metrics, validation_n) = task
    design = builtin_design(design_name)
    train, _ = generate(design, spawn_rng(seed, d_idx, rep, 0))
    val, _ = generate(design, spawn_rng(seed, d_idx, rep, 1), n=validation_n)
    rows = []
    for mi, method in enumerate(methods):
        kind = _KIND_BY_METHOD[method]
        fit_cfg = estimators.FitConfig(
            loss_spec=LossSpec(kind="bce"),
            seed=derive_seed(seed, d_idx, rep, 2, mi),
        )
        grid = GridSpec(seed=derive_seed(seed, d_idx, rep, 3, mi))
        table = cv_grid_table(train, kind, grid, fit_cfg, metric_names=metrics)
        refits = {}
        for metric in metrics:
            best = select_best(table, metric)
            key = (best.q, best.lam)
            if key not in refits:
                cfg = _point_config(fit_cfg, best.q, best.lam,
                                    derive_seed(seed, d_idx, rep, 4, mi))
                refits[key] = _fit_by_kind(kind, train, cfg)
            fm = refits[key]
            info = METRICS[metric]
            pred = fm.predict_proba(val.X) if info.needs_proba else fm.predict(val.X)
            rows.append((design_name, rep, method, metric, info.fn(val.Y, pred)))
    return rows


def _write_rows(path, header, rows, formats):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for fmt, v in zip(formats, row)) + "\n")


def _fmt_str(v):
    return str(v)


def _fmt_real(v):
    return "" if v is None else format_real(v)


def run_table1(out_dir, designs=TABLE1_DESIGNS, methods=TABLE1_METHODS,
               metrics=ALL_METRICS, reps=200, seed=0, jobs=1,
               validation_n=1000):
    """Benchmark the chosen methods on the chosen designs.

    Writes per-repetition scores, per-method means, and Wilcoxon
    signed-rank p-values against the network, then the manifest.  Returns
    the scores rows, summary rows, and Wilcoxon rows.
    """
    started = time.time()
    for design in designs:
        builtin_design(design)
    for method in methods:
        if method not in _KIND_BY_METHOD:
            raise ValidationError(f"unknown method {method!r}")
    for metric in metrics:
        if metric not in METRICS:
            raise ValidationError(f"unknown metric {metric!r}")
    os.makedirs(out_dir, exist_ok=True)

    tasks = [
        (seed, d_idx, design, rep, tuple(methods), tuple(metrics), validation_n)
        for d_idx, design in enumerate(designs)
        for rep in range(reps)
    ]
    rows = [row for chunk in _run_tasks(_table1_task, tasks, jobs)
            for row in chunk]

    summary = []
    wilcoxon = []
    for design in designs:
        for metric in metrics:
            per_method = {}
            for method in methods:
                values = [r[4] for r in rows
                          if r[0] == design and r[2] == method and r[3] == metric]
                per_method[method] = np.array(values)
                summary.append((design, method, metric,
                                float(np.mean(values)), float(np.std(values))))
            if "ccn" in per_method:
                ccn_scores = per_method["ccn"]
                info = METRICS[metric]
                for method in methods:
                    if method == "ccn":
                        continue
                    other = per_method[method]
                    try:
                        p = wilcoxon_signed_rank(ccn_scores, other)
                    except Exception:
                        p = None
                    better = int(np.sum([info.better(c, o)
                                         for c, o in zip(ccn_scores, other)]))
                    wilcoxon.append((design, metric, method, p,
                                     float(np.mean(ccn_scores)),
                                     float(np.mean(other)), better, len(other)))

    scores_path = os.path.join(out_dir, "table1_scores.csv")
    summary_path = os.path.join(out_dir, "table1_summary.csv")
    wilcoxon_path = os.path.join(out_dir, "table1_wilcoxon.csv")
    _write_rows(scores_path, ("design", "rep", "method", "metric", "value"),
                rows, (_fmt_str, _fmt_str, _fmt_str, _fmt_str, _fmt_real))
    _write_rows(summary_path, ("design", "method", "metric", "mean", "sd"),
                summary, (_fmt_str, _fmt_str, _fmt_str, _fmt_real, _fmt_real))
    _write_rows(
        wilcoxon_path,
        ("design", "metric", "method", "p_value", "ccn_mean", "method_mean",
         "ccn_better_count", "reps"),
        wilcoxon,
        (_fmt_str, _fmt_str, _fmt_str, _fmt_real, _fmt_real, _fmt_real,
         _fmt_str, _fmt_str),
    )
    write_manifest(
        os.path.join(out_dir, "manifest.json"),
        command="bench table1",
        config={"designs": list(designs), "methods": list(methods),
                "metrics": list(metrics), "reps": reps, "jobs": jobs,
                "validation_n": validation_n},
        seed=seed,
        artifacts=[scores_path, summary_path, wilcoxon_path],
        started_at=started,
    )
    return rows, summary, wilcoxon


def _figure6_task(task):
    seed, dgp_index, reps, config = task
    return run_experiment_dgp(seed, dgp_index, reps, config)


def run_figure6(out_dir, n_dgps=100, reps_per_dgp=10, seed=0, jobs=1,
                config=None):
    """Measure-validation experiment: random DGPs, excess loss, measures.

    Writes one CSV row per DGP plus a Spearman summary per measure, then
    the manifest.  Returns the rows and the summary.
    """
    started = time.time()
    if n_dgps < 1 or reps_per_dgp < 1:
        raise ValidationError("budgets must be >= 1")
    if config is None:
        config = ExperimentConfig()
    os.makedirs(out_dir, exist_ok=True)
    tasks = [(seed, d, reps_per_dgp, config) for d in range(n_dgps)]
    rows = _run_tasks(_figure6_task, tasks, jobs)
    correlations = summarize_experiment(rows)

    dgps_path = os.path.join(out_dir, "figure6_dgps.csv")
    summary_path = os.path.join(out_dir, "figure6_summary.csv")
    header = ("dgp", "excess_hamming") + MEASURE_COLUMNS + ("failed_reps", "reps")
    _write_rows(
        dgps_path, header,
        [(r["dgp"], r["excess_hamming"]) + tuple(r[m] for m in MEASURE_COLUMNS)
         + (r["failed_reps"], r["reps"]) for r in rows],
        (_fmt_str, _fmt_real) + (_fmt_real,) * len(MEASURE_COLUMNS)
        + (_fmt_str, _fmt_str),
    )
    summary_rows = []
    for measure in MEASURE_COLUMNS:
        result = correlations[measure]
        if result is None:
            summary_rows.append((measure, None, None, len(rows)))
        else:
            summary_rows.append((measure, result[0], result[1], len(rows)))
    _write_rows(summary_path, ("measure", "spearman_rho", "p_value", "n_dgps"),
                summary_rows, (_fmt_str, _fmt_real, _fmt_real, _fmt_str))
    write_manifest(
        os.path.join(out_dir, "manifest.json"),
        command="bench figure6",
        config={"n_dgps": n_dgps, "reps_per_dgp": reps_per_dgp, "jobs": jobs,
                "train_n": config.train_n, "validation_n": config.validation_n,
                "n_random_starts": config.n_random_starts},
        seed=seed,
        artifacts=[dgps_path, summary_path],
        started_at=started,
    )
    return rows, correlations
