"""Multi-label evaluation metrics and the paired Wilcoxon signed-rank test.

Hamming, zero-one, and negative log-likelihood are losses (lower is better);
micro-F1 and macro-F1 are scores (higher is better).  All functions take
n x L arrays and are pure.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ValidationError

__all__ = [
    "hamming",
    "zero_one",
    "micro_f1",
    "macro_f1",
    "nll",
    "wilcoxon_signed_rank",
    "METRICS",
    "MetricInfo",
]

_NLL_CLIP = 1e-12


def _pair(Y, Yhat, name="Yhat"):
    Y = np.asarray(Y, dtype=float)
    Yhat = np.asarray(Yhat, dtype=float)
    if Y.ndim != 2 or Yhat.ndim != 2:
        raise ValidationError("metric inputs must be 2-D arrays")
    if Y.shape != Yhat.shape:
        raise ValidationError(f"shape mismatch: Y is {Y.shape}, {name} is {Yhat.shape}")
    if Y.size == 0:
        raise ValidationError("metric inputs must be non-empty")
    return Y, Yhat


def hamming(Y, Yhat):
    """Fraction of label cells that disagree."""
    Y, Yhat = _pair(Y, Yhat)
    return float(np.mean(Y != Yhat))


def zero_one(Y, Yhat):
    """Fraction of observations with at least one label wrong."""
    Y, Yhat = _pair(Y, Yhat)
    return float(np.mean(np.any(Y != Yhat, axis=1)))


def _f1(tp, fp, fn):
    denom = 2.0 * tp + fp + fn
    # empty label in both truth and prediction counts as perfect
    return 1.0 if denom == 0.0 else 2.0 * tp / denom


def micro_f1(Y, Yhat):
    """F1 from confusion counts pooled over all cells."""
    Y, Yhat = _pair(Y, Yhat)
    tp = float(np.sum((Y == 1) & (Yhat == 1)))
    fp = float(np.sum((Y == 0) & (Yhat == 1)))
    fn = float(np.sum((Y == 1) & (Yhat == 0)))
    return _f1(tp, fp, fn)


def macro_f1(Y, Yhat):
    """Mean over labels of the per-label F1."""
    Y, Yhat = _pair(Y, Yhat)
    scores = []
    for l in range(Y.shape[1]):
        tp = float(np.sum((Y[:, l] == 1) & (Yhat[:, l] == 1)))
        fp = float(np.sum((Y[:, l] == 0) & (Yhat[:, l] == 1)))
        fn = float(np.sum((Y[:, l] == 1) & (Yhat[:, l] == 0)))
        scores.append(_f1(tp, fp, fn))
    return float(np.mean(scores))


def nll(Y, P):
    """Average negative log-likelihood of binary labels under probabilities P."""
    Y, P = _pair(Y, P, name="P")
    P = np.clip(P, _NLL_CLIP, 1.0 - _NLL_CLIP)
    return float(-np.mean(Y * np.log(P) + (1.0 - Y) * np.log1p(-P)))


def _average_ranks(values):
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0])
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def wilcoxon_signed_rank(a, b):
    """Two-sided p-value of the paired Wilcoxon signed-rank test.

    Zero differences are dropped; the p-value uses the normal approximation
    with tie correction.  Requires at least 10 nonzero differences.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("paired samples must be 1-D arrays of equal length")
    d = a - b
    d = d[d != 0.0]
    n = d.shape[0]
    if n < 10:
        raise InsufficientDataError(
            f"need at least 10 nonzero differences, got {n}"
        )
    ranks = _average_ranks(np.abs(d))
    w_plus = float(np.sum(ranks[d > 0.0]))
    mean = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, counts = np.unique(np.abs(d), return_counts=True)
    var -= float(np.sum(counts**3 - counts)) / 48.0
    if var <= 0.0:
        return 1.0 if w_plus == mean else 0.0
    z = (w_plus - mean) / math.sqrt(var)
    return float(math.erfc(abs(z) / math.sqrt(2.0)))


@dataclass(frozen=True)
class MetricInfo:
    fn: callable
    higher_is_better: bool
    needs_proba: bool

    def better(self, x, y):
        """True when score x is strictly better than y."""
        return x > y if self.higher_is_better else x < y


METRICS = {
    "hamming": MetricInfo(hamming, higher_is_better=False, needs_proba=False),
    "zero_one": MetricInfo(zero_one, higher_is_better=False, needs_proba=False),
    "nll": MetricInfo(nll, higher_is_better=False, needs_proba=True),
    "micro_f1": MetricInfo(micro_f1, higher_is_better=True, needs_proba=False),
    "macro_f1": MetricInfo(macro_f1, higher_is_better=True, needs_proba=False),
}
