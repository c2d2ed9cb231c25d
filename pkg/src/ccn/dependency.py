"""Label-interdependency measures.

Three classical summaries (label density, co-occurrence-weighted label
dependency, fraction of unconditionally dependent pairs) plus a
cross-validated conditional-dependency score: the out-of-sample gain from
giving each label's classifier the true values of the other labels on top
of the features.  The score is oriented so that positive always means
conditional dependence is present, whatever the metric's direction; the raw
signed difference Performance(with labels) - Performance(without) is kept
alongside.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats as _sps

from . import estimators
from .errors import FitError, OptimizerError, TuningError, ValidationError
from .estimators import FitConfig, _fit_stage
from .metrics import METRICS, hamming
from .model import LossSpec, _stable_sigmoid
from .numkit import chi2_sf_1dof, derive_seed, spawn_rng
from .optimizer import OptimizerConfig
from .simgen import RandomDgpSpec, generate, random_dgp
from .tuning import DEFAULT_LAMBDA_GRID, GridSpec, grid_search, kfold_split

__all__ = [
    "label_density",
    "label_dependency",
    "unconditional_dependency",
    "conditional_dependency",
    "dependency_report",
    "DependencyReport",
    "measure_validation_experiment",
    "run_experiment_dgp",
    "summarize_experiment",
    "ExperimentConfig",
    "spearman",
]

log = logging.getLogger("ccn")

_BCE = LossSpec(kind="bce", q=1.0)


def _binary_matrix(Y):
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.size == 0:
        raise ValidationError("Y must be a non-empty 2-D binary matrix")
    if not np.isin(Y, (0.0, 1.0)).all():
        raise ValidationError("Y must contain only 0/1 values")
    return Y


def label_density(Y):
    """Average fraction of positive labels per observation."""
    return float(np.mean(_binary_matrix(Y)))


def label_dependency(Y):
    """Co-occurrence-weighted mean absolute pairwise correlation.

    Pairs with a constant column are skipped (their correlation is
    undefined); returns None when every pair is skipped or the total
    co-occurrence weight is zero.
    """
    Y = _binary_matrix(Y)
    L = Y.shape[1]
    if L < 2:
        raise ValidationError("label dependency needs at least two labels")
    sd = Y.std(axis=0)
    num = 0.0
    den = 0.0
    usable = False
    for l in range(L):
        for k in range(l + 1, L):
            if sd[l] == 0.0 or sd[k] == 0.0:
                continue
            usable = True
            co = float(Y[:, l] @ Y[:, k])
            rho = float(np.corrcoef(Y[:, l], Y[:, k])[0, 1])
            num += abs(rho) * co
            den += co
    if not usable or den == 0.0:
        return None
    return num / den


def _chi2_pair(a, b):
    n = a.shape[0]
    n11 = float(np.sum((a == 1) & (b == 1)))
    n10 = float(np.sum((a == 1) & (b == 0)))
    n01 = float(np.sum((a == 0) & (b == 1)))
    n00 = float(np.sum((a == 0) & (b == 0)))
    row1, row0 = n11 + n10, n01 + n00
    col1, col0 = n11 + n01, n10 + n00
    denom = row1 * row0 * col1 * col0
    if denom == 0.0:
        # a zero margin (constant column) carries no evidence of dependence
        return 0.0
    return n * (n11 * n00 - n10 * n01) ** 2 / denom


def unconditional_dependency(Y):
    """Fraction of label pairs dependent at 99% confidence (chi-square)."""
    Y = _binary_matrix(Y)
    L = Y.shape[1]
    if L < 2:
        raise ValidationError("unconditional dependency needs at least two labels")
    flagged = 0
    pairs = 0
    for l in range(L):
        for k in range(l + 1, L):
            pairs += 1
            p = chi2_sf_1dof(_chi2_pair(Y[:, l], Y[:, k]))
            if p <= 0.01:
                flagged += 1
    return flagged / pairs


def _child_rng(rng):
    """Deterministic child generator drawn from the parent's stream."""
    return np.random.Generator(np.random.PCG64(int(rng.integers(2**63))))


def _single_label_score(metric, y_true, y_hat, p_hat):
    info = METRICS[metric]
    pred = p_hat if info.needs_proba else y_hat
    return info.fn(y_true[:, None], pred[:, None])


def _fit_penalized_logistic(F, y, lam):
    """Standalone ridge logistic fit: mean BCE plus (lam / n_features) |w|^2."""
    ridge = lam / max(1, F.shape[1])
    return _fit_stage(F, y, _BCE, 1.0 / F.shape[0], ridge, OptimizerConfig())


def _intercept_only(y):
    p = min(max(float(np.mean(y)), 1e-12), 1.0 - 1e-12)
    return float(np.log(p / (1.0 - p)))


def _cv_label_predictions(F, y, train_idx, test_idx, lambda_grid, inner_folds,
                          metric, rng):
    """Inner-CV penalty choice on the training part, then heldout predictions.

    A fit failure falls back to an intercept-only model so the measure stays
    total on degenerate data.
    """
    F_tr, y_tr = F[train_idx], y[train_idx]
    inner = kfold_split(len(train_idx), min(inner_folds, len(train_idx)), rng)
    all_idx = np.arange(len(train_idx))
    info = METRICS[metric]
    best = None
    for lam in lambda_grid:
        scores = []
        try:
            for hold in inner:
                fit_idx = np.setdiff1d(all_idx, hold, assume_unique=True)
                bias, coef = _fit_penalized_logistic(F_tr[fit_idx], y_tr[fit_idx], lam)
                p = _stable_sigmoid(bias + F_tr[hold] @ coef)
                scores.append(_single_label_score(
                    metric, y_tr[hold], (p >= 0.5).astype(float), p))
        except FitError:
            continue
        mean = float(np.mean(scores))
        if best is None or info.better(mean, best[0]) or \
                (mean == best[0] and lam > best[1]):
            best = (mean, lam)
    lam = best[1] if best is not None else lambda_grid[-1]
    try:
        bias, coef = _fit_penalized_logistic(F_tr, y_tr, lam)
    except FitError:
        bias, coef = _intercept_only(y_tr), np.zeros(F.shape[1])
    return _stable_sigmoid(bias + F[test_idx] @ coef)


def conditional_dependency(dataset, metric="hamming", outer_folds=10,
                           inner_folds=5, lambda_grid=DEFAULT_LAMBDA_GRID,
                           rng=None, return_raw=False):
    """Out-of-sample gain from conditioning each label on the other labels.

    For every label l two penalized logistic regressions are compared: one
    on the features alone and one on the features augmented with the true
    values of the other labels (those true values are also used when
    predicting, which is what makes the measure an upper bound on usable
    dependence).  Out-of-sample predictions come from ``outer_folds``-fold
    CV with the penalty chosen per fold by ``inner_folds``-fold CV.
    Positive values indicate conditional dependence for any metric.
    """
    if rng is None:
        rng = spawn_rng(0)
    Y = _binary_matrix(dataset.Y)
    X = dataset.X
    n, L = Y.shape
    if L < 2:
        raise ValidationError("conditional dependency needs at least two labels")
    if n < outer_folds:
        raise ValidationError("need at least as many observations as outer folds")
    if metric not in METRICS:
        raise ValidationError(f"unknown metric {metric!r}")

    outer = kfold_split(n, outer_folds, rng)
    all_idx = np.arange(n)
    P_without = np.empty((n, L))
    P_with = np.empty((n, L))
    for test_idx in outer:
        train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
        for l in range(L):
            others = [k for k in range(L) if k != l]
            F_with = np.hstack([X, Y[:, others]])
            P_without[test_idx, l] = _cv_label_predictions(
                X, Y[:, l], train_idx, test_idx, lambda_grid,
                inner_folds, metric, _child_rng(rng))
            P_with[test_idx, l] = _cv_label_predictions(
                F_with, Y[:, l], train_idx, test_idx, lambda_grid,
                inner_folds, metric, _child_rng(rng))

    info = METRICS[metric]

    def _perf(P):
        pred = P if info.needs_proba else (P >= 0.5).astype(float)
        return info.fn(Y, pred)

    raw = _perf(P_with) - _perf(P_without)
    oriented = raw if info.higher_is_better else -raw
    if return_raw:
        return oriented, raw
    return oriented


@dataclass
class DependencyReport:
    """All four measures plus the CV provenance of the conditional score."""

    label_density: float
    label_dependency: object
    unconditional_dependency: object
    conditional_dependency: object
    conditional_dependency_raw: object
    metric_used: str
    outer_folds: int
    inner_folds: int
    lambda_grid: tuple
    seed: object

    def to_dict(self):
        return {
            "label_density": self.label_density,
            "label_dependency": self.label_dependency,
            "unconditional_dependency": self.unconditional_dependency,
            "conditional_dependency": self.conditional_dependency,
            "conditional_dependency_raw": self.conditional_dependency_raw,
            "metric_used": self.metric_used,
            "cv": {
                "outer_folds": self.outer_folds,
                "inner_folds": self.inner_folds,
                "lambda_grid": list(self.lambda_grid),
                "seed": self.seed,
            },
        }


def dependency_report(dataset, metric="hamming", outer_folds=10, inner_folds=5,
                      lambda_grid=DEFAULT_LAMBDA_GRID, seed=0):
    """Compute every measure; pairwise ones are None when L < 2."""
    Y = _binary_matrix(dataset.Y)
    density = label_density(Y)
    if Y.shape[1] < 2:
        dep = uncond = cond = raw = None
    else:
        dep = label_dependency(Y)
        uncond = unconditional_dependency(Y)
        cond, raw = conditional_dependency(
            dataset, metric=metric, outer_folds=outer_folds,
            inner_folds=inner_folds, lambda_grid=lambda_grid,
            rng=spawn_rng(seed), return_raw=True)
    return DependencyReport(
        label_density=density,
        label_dependency=dep,
        unconditional_dependency=uncond,
        conditional_dependency=cond,
        conditional_dependency_raw=raw,
        metric_used=metric,
        outer_folds=outer_folds,
        inner_folds=inner_folds,
        lambda_grid=tuple(lambda_grid),
        seed=seed,
    )


def spearman(a, b):
    """Spearman rank correlation and two-sided p-value, or None when n < 3."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("spearman needs two equal-length vectors")
    if a.size < 3:
        return None
    rho, p = _sps.spearmanr(a, b)
    if not np.isfinite(rho):
        return None
    return float(rho), float(p)


@dataclass
class ExperimentConfig:
    """Scale and protocol knobs for the measure-validation experiment."""

    train_n: int = 200
    validation_n: int = 1000
    grid: GridSpec = field(default_factory=lambda: GridSpec(scoring="hamming"))
    outer_folds: int = 10
    inner_folds: int = 5
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    n_random_starts: int = 10
    dgp_spec: RandomDgpSpec = field(default_factory=RandomDgpSpec)


def run_experiment_dgp(seed, dgp_index, reps, config=None):
    """One experiment row: a random process, its excess loss, and measures.

    Draws a random design keyed by ``(seed, dgp_index)``, then for each
    repetition fits tuned network and binary-relevance models on a fresh
    training set, scores them on a fresh validation set, and computes all
    four measures on the training data.  Repetition values are averaged
    into a single row; failed repetitions are dropped and counted.
    """
    if config is None:
        config = ExperimentConfig()
    design = random_dgp(config.dgp_spec, spawn_rng(seed, dgp_index, 0))
    excess = []
    measures = {name: [] for name in MEASURE_COLUMNS}
    failures = 0
    for rep in range(reps):
        try:
            train, _ = generate(design, spawn_rng(seed, dgp_index, 1 + rep, 0),
                                n=config.train_n)
            val, _ = generate(design, spawn_rng(seed, dgp_index, 1 + rep, 1),
                              n=config.validation_n)
            scores = {}
            for slot, kind in enumerate(("ccn", "br")):
                fit_cfg = FitConfig(
                    loss_spec=LossSpec(kind="bce"),
                    n_random_starts=config.n_random_starts,
                    seed=derive_seed(seed, dgp_index, rep, 2 + slot),
                )
                grid = replace(config.grid,
                               seed=derive_seed(seed, dgp_index, rep, 4 + slot))
                q, lam, _table = grid_search(train, kind, grid, fit_cfg)
                spec = replace(fit_cfg.loss_spec,
                               q=fit_cfg.loss_spec.q if q is None else q, lam=lam)
                best_cfg = replace(fit_cfg, loss_spec=spec)
                fm = (estimators.fit_ccn(train, best_cfg) if kind == "ccn"
                      else estimators.fit_br(train, best_cfg))
                scores[kind] = hamming(val.Y, fm.predict(val.X))
            excess.append(scores["br"] - scores["ccn"])
            measures["label_density"].append(label_density(train.Y))
            measures["label_dependency"].append(label_dependency(train.Y))
            measures["unconditional_dependency"].append(
                unconditional_dependency(train.Y))
            measures["conditional_dependency"].append(conditional_dependency(
                train, metric="hamming", outer_folds=config.outer_folds,
                inner_folds=config.inner_folds, lambda_grid=config.lambda_grid,
                rng=spawn_rng(seed, dgp_index, 1 + rep, 6)))
        except (FitError, TuningError, OptimizerError) as err:
            failures += 1
            log.warning("dgp %d rep %d failed: %s", dgp_index, rep, err)
            continue

    def _mean(values):
        usable = [v for v in values if v is not None]
        return float(np.mean(usable)) if usable else None

    row = {"dgp": dgp_index, "excess_hamming": _mean(excess)}
    for name in MEASURE_COLUMNS:
        row[name] = _mean(measures[name])
    row["failed_reps"] = failures
    row["reps"] = reps
    return row


MEASURE_COLUMNS = ("label_density", "label_dependency",
                   "unconditional_dependency", "conditional_dependency")


def summarize_experiment(rows):
    """Spearman correlation of each measure with the excess loss across DGPs."""
    correlations = {}
    for measure in MEASURE_COLUMNS:
        pairs = [(r[measure], r["excess_hamming"]) for r in rows
                 if r[measure] is not None and r["excess_hamming"] is not None]
        if len(pairs) < 3:
            correlations[measure] = None
            continue
        a = np.array([p[0] for p in pairs])
        b = np.array([p[1] for p in pairs])
        correlations[measure] = spearman(a, b)
    return correlations


def measure_validation_experiment(n_dgps, reps_per_dgp, seed=0, config=None):
    """Table of (excess loss, measures) per random DGP plus Spearman summary.

    Per-DGP work is keyed by ``(seed, dgp_index)`` so results do not depend
    on execution order or parallel layout.
    """
    if n_dgps < 1 or reps_per_dgp < 1:
        raise ValidationError("budgets must be >= 1")
    rows = [run_experiment_dgp(seed, d, reps_per_dgp, config)
            for d in range(n_dgps)]
    return rows, summarize_experiment(rows)
