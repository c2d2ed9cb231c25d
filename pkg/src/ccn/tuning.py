"""K-fold cross-validated grid search over (q, lam).

The network tunes both the aggregation exponent q and the penalty lam;
the stagewise baselines tune lam only.  One CV pass can score several
metrics at once so that callers evaluating many metrics fit each
(grid point, fold) pair a single time.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from . import estimators
from .errors import FitError, TuningError, ValidationError
from .metrics import METRICS
from .model import Dataset
from .numkit import derive_seed, spawn_rng

__all__ = ["GridSpec", "GridPoint", "kfold_split", "grid_search",
           "cv_grid_table", "select_best", "ESTIMATOR_KINDS"]

DEFAULT_Q_GRID = (1.0, 1.5, 2.0, 3.0, 5.0)
DEFAULT_LAMBDA_GRID = (0.0001, 0.001, 0.01, 0.05, 0.1, 0.25)

ESTIMATOR_KINDS = ("ccn", "br", "cc-probability", "cc-binary")


@dataclass
class GridSpec:
    q_values: tuple = DEFAULT_Q_GRID
    lambda_values: tuple = DEFAULT_LAMBDA_GRID
    k_folds: int = 5
    scoring: str = "hamming"
    seed: int = 0

    def __post_init__(self):
        if len(self.q_values) == 0 or len(self.lambda_values) == 0:
            raise ValidationError("grids must be non-empty")
        if self.k_folds < 2:
            raise ValidationError("k_folds must be >= 2")
        if self.scoring not in METRICS:
            raise ValidationError(f"unknown scoring metric {self.scoring!r}")


@dataclass
class GridPoint:
    q: object
    lam: float
    mean_scores: dict = field(default_factory=dict)
    fold_scores: dict = field(default_factory=dict)
    failed: bool = False
    error: str = ""


def kfold_split(n, k, rng):
    """Shuffle 0..n-1 into k folds whose sizes differ by at most one."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    if k > n:
        raise ValidationError(f"cannot split {n} observations into {k} folds")
    perm = rng.permutation(n)
    base, rem = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < rem else 0)
        folds.append(np.sort(perm[start : start + size]))
        start += size
    return folds


def _fit_by_kind(kind, dataset, config):
    if kind == "ccn":
        return estimators.fit_ccn(dataset, config)
    if kind == "br":
        return estimators.fit_br(dataset, config)
    if kind == "cc-probability":
        return estimators.fit_cc(dataset, config, propagation="probability")
    if kind == "cc-binary":
        return estimators.fit_cc(dataset, config, propagation="binary")
    raise ValidationError(f"unknown estimator kind {kind!r}")


def _grid_points(kind, grid):
    if kind == "ccn":
        return [(q, lam) for q in grid.q_values for lam in grid.lambda_values]
    return [(None, lam) for lam in grid.lambda_values]


def _point_config(fit_config, q, lam, seed):
    spec = fit_config.loss_spec
    new_spec = replace(spec, q=spec.q if q is None else q, lam=lam)
    return replace(fit_config, loss_spec=new_spec, seed=seed)


def cv_grid_table(dataset, estimator_kind, grid, fit_config, metric_names=None):
    """Mean out-of-fold scores for every grid point and requested metric.

    Folds are fixed across grid points (and shared by every metric), so
    scores are paired.  A grid point whose fit fails on any fold is marked
    failed and excluded from selection.
    """
    if estimator_kind not in ESTIMATOR_KINDS:
        raise ValidationError(f"unknown estimator kind {estimator_kind!r}")
    if metric_names is None:
        metric_names = [grid.scoring]
    for name in metric_names:
        if name not in METRICS:
            raise ValidationError(f"unknown metric {name!r}")
    folds = kfold_split(dataset.n, grid.k_folds, spawn_rng(grid.seed))
    all_idx = np.arange(dataset.n)
    need_proba = any(METRICS[m].needs_proba for m in metric_names)

    table = []
    for pi, (q, lam) in enumerate(_grid_points(estimator_kind, grid)):
        point = GridPoint(q=q, lam=lam,
                          fold_scores={m: [] for m in metric_names})
        for fi, test_idx in enumerate(folds):
            train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=True)
            sub = Dataset(dataset.X[train_idx], dataset.Y[train_idx])
            cfg = _point_config(fit_config, q, lam,
                                derive_seed(fit_config.seed, pi, fi))
            try:
                fm = _fit_by_kind(estimator_kind, sub, cfg)
            except FitError as err:
                point.failed = True
                point.error = f"fold {fi}: {err}"
                break
            X_te, Y_te = dataset.X[test_idx], dataset.Y[test_idx]
            yhat = fm.predict(X_te)
            proba = fm.predict_proba(X_te) if need_proba else None
            for m in metric_names:
                info = METRICS[m]
                value = info.fn(Y_te, proba if info.needs_proba else yhat)
                point.fold_scores[m].append(value)
        if not point.failed:
            point.mean_scores = {
                m: float(np.mean(point.fold_scores[m])) for m in metric_names
            }
        table.append(point)
    return table


def select_best(table, metric):
    """Best grid point for ``metric``; ties go to larger lam, then smaller q."""
    info = METRICS[metric]
    best = None
    for point in table:
        if point.failed:
            continue
        score = point.mean_scores[metric]
        if best is None:
            best = (point, score)
            continue
        b_point, b_score = best
        if score == b_score:
            q = -np.inf if point.q is None else point.q
            bq = -np.inf if b_point.q is None else b_point.q
            if (point.lam, -q) > (b_point.lam, -bq):
                best = (point, score)
        elif info.better(score, b_score):
            best = (point, score)
    if best is None:
        raise TuningError("every grid point failed during cross-validation")
    return best[0]


def grid_search(dataset, estimator_kind, grid, fit_config):
    """Cross-validated selection of (q, lam); returns them plus the CV table."""
    table = cv_grid_table(dataset, estimator_kind, grid, fit_config)
    best = select_best(table, grid.scoring)
    return best.q, best.lam, table
