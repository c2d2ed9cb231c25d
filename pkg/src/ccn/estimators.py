"""Fitting routines: the joint network, binary relevance, and chain baselines.

All fits share the same plumbing: resolve a label order, permute the label
columns into chain order, minimize with BFGS, and report a FittedModel that
predicts in the original label indexing (the permutation is inverted on the
way out).

Stagewise fits (binary relevance, classifier chains, and the informed
initialization) minimize the joint objective restricted to one label at a
time: per-label loss scaled by 1 / (n L) plus the ridge lam / r on that
stage's weights, with r the free-parameter count of the full network.  At
q = 1 with zero dependencies this makes binary relevance minimize exactly
the frozen-dependency network loss.
"""

import numpy as np
from dataclasses import dataclass, field

from . import model
from .errors import FitError, OptimizerError, ValidationError
from .model import (
    LossSpec,
    ModelParams,
    SIGMOID,
    flat_objective,
    pack_params,
    unpack_params,
)
from .numkit import spawn_rng
from .optimizer import OptimizerConfig, minimize

__all__ = [
    "FitConfig",
    "FittedModel",
    "fit_ccn",
    "fit_br",
    "fit_cc",
    "informed_init",
    "random_init",
    "entropy_label_order",
]


@dataclass
class FitConfig:
    loss_spec: LossSpec = field(default_factory=LossSpec)
    activation: str = None
    n_random_starts: int = 10
    use_informed_init: bool = True
    seed: int = 0
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    label_order: object = "given"
    freeze_c: bool = False

    def __post_init__(self):
        if self.n_random_starts < 0:
            raise ValidationError("n_random_starts must be >= 0")
        if self.activation is None:
            self.activation = self.loss_spec.default_activation

    def resolved_order(self, Y):
        return resolve_label_order(self.label_order, Y)


@dataclass
class FittedModel:
    """Estimated parameters plus everything needed to predict.

    ``params`` lives in chain order; ``label_order[j]`` is the original
    column index sitting at chain position j.  Predictions are reported in
    the original indexing.
    """

    params: ModelParams
    label_order: np.ndarray
    activation: str
    loss_spec: LossSpec
    training_loss: float
    n_starts_used: int
    method: str = "ccn"
    propagation: str = "network"
    flags: tuple = ()

    def _chain_probs(self, X):
        if self.propagation == "network":
            return model.forward(self.params, X, self.activation).p
        p, _ = _binary_chain_forward(self.params, X)
        return p

    def _chain_predictions(self, X):
        if self.propagation == "network":
            return model.predict(self.params, X, self.activation)
        _, z = _binary_chain_forward(self.params, X)
        return z.astype(np.int64)

    def predict_proba(self, X):
        """Continuous predictions (probabilities under sigmoid), original order."""
        return _unpermute(self._chain_probs(X), self.label_order)

    def predict(self, X):
        """Binary predictions in the original label order."""
        return _unpermute(self._chain_predictions(X), self.label_order)


def _unpermute(chain_cols, order):
    out = np.empty_like(chain_cols)
    out[:, order] = chain_cols
    return out


def _binary_chain_forward(params, X):
    """Chain forward pass that thresholds each prediction before propagating."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    L = params.n_labels
    p = np.empty((n, L))
    z = np.empty((n, L))
    for l in range(L):
        t = params.b[l] + X @ params.W[l]
        if l > 0:
            t = t + z[:, :l] @ params.C[l, :l]
        p[:, l] = model._stable_sigmoid(t)
        z[:, l] = p[:, l] >= 0.5
    return p, z


def entropy_label_order(Y):
    """Labels sorted by ascending marginal entropy, ties kept in index order."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise ValidationError("Y must be a non-empty 2-D label matrix")
    freq = Y.mean(axis=0)
    ent = np.zeros(Y.shape[1])
    inner = (freq > 0.0) & (freq < 1.0)
    f = freq[inner]
    ent[inner] = -(f * np.log(f) + (1.0 - f) * np.log1p(-f))
    return np.argsort(ent, kind="stable")


def resolve_label_order(order, Y):
    L = np.asarray(Y).shape[1]
    if isinstance(order, str):
        if order == "given":
            return np.arange(L)
        if order == "entropy":
            return entropy_label_order(Y)
        raise ValidationError(f"unknown label order {order!r}")
    order = np.asarray(order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(L)):
        raise ValidationError(f"label order must be a permutation of 0..{L - 1}")
    return order


def random_init(rng, L, m):
    """Random parameters, entries i.i.d. uniform on [-0.5, 0.5]."""
    b = rng.uniform(-0.5, 0.5, size=L)
    W = rng.uniform(-0.5, 0.5, size=(L, m))
    C = np.tril(rng.uniform(-0.5, 0.5, size=(L, L)), -1)
    return ModelParams(b=b, W=W, C=C)


def _degenerate_label_flags(Y, lam):
    if lam == 0.0 and Y.size and np.any((Y.mean(axis=0) == 0) | (Y.mean(axis=0) == 1)):
        return ("constant-label-without-regularization",)
    return ()


def _stage_spec(spec):
    # single-label stage: aggregation plays no role, reuse the focusing
    # parameters of the joint loss
    return LossSpec(kind=spec.kind, xi_plus=spec.xi_plus, xi_minus=spec.xi_minus,
                    kappa=spec.kappa, q=1.0, lam=0.0)


def _fit_stage(F, y, spec, loss_scale, ridge, opt_config):
    """Penalized single-label fit (bias plus weights on F) from a zero start."""
    obj = flat_objective(
        F, y[:, None], _stage_spec(spec), SIGMOID,
        include_c=False, loss_scale=loss_scale, ridge=ridge,
    )
    try:
        res = minimize(obj, np.zeros(1 + F.shape[1]), opt_config)
    except OptimizerError as err:
        raise FitError(f"single-label stage failed: {err}") from err
    return res.x[0], res.x[1:]


def _stagewise_params(X, Y, spec, opt_config, propagate, with_dependencies=True):
    """Greedy chain fit; stage l regresses label l on X plus earlier outputs.

    ``propagate`` is "probability" or "binary" and controls what earlier
    stages feed forward, both in-sample and (for the assembled parameters)
    at prediction time.
    """
    n, m = X.shape
    L = Y.shape[1]
    r = L * m + L * (L - 1) // 2
    loss_scale = 1.0 / (n * L)
    ridge = spec.lam / r
    b = np.zeros(L)
    W = np.zeros((L, m))
    C = np.zeros((L, L))
    Z = np.zeros((n, L))
    for l in range(L):
        k = l if with_dependencies else 0
        F = np.hstack([X, Z[:, :k]]) if k else X
        bias, coef = _fit_stage(F, Y[:, l], spec, loss_scale, ridge, opt_config)
        b[l] = bias
        W[l] = coef[:m]
        if k:
            C[l, :k] = coef[m:]
        p = model._stable_sigmoid(bias + F @ coef)
        Z[:, l] = p if propagate == "probability" else (p >= 0.5)
    return ModelParams(b=b, W=W, C=C)


def _prologue(dataset, config):
    if dataset.n < 2:
        raise ValidationError("need at least two observations to fit")
    order = config.resolved_order(dataset.Y)
    Yp = np.ascontiguousarray(dataset.Y[:, order])
    X = np.ascontiguousarray(dataset.X)
    return X, Yp, order


def fit_ccn(dataset, config):
    """Joint fit of the full network by BFGS from multiple starts.

    Runs the informed initialization (when enabled and the loss is
    probabilistic) plus ``n_random_starts`` random starts, and keeps the
    candidate with the lowest final loss.
    """
    X, Yp, order = _prologue(dataset, config)
    spec = config.loss_spec
    L, m = Yp.shape[1], X.shape[1]
    include_c = not config.freeze_c

    starts = []
    if config.use_informed_init and spec.probabilistic:
        informed = _stagewise_params(
            X, Yp, spec, config.optimizer, "probability",
            with_dependencies=include_c,
        )
        starts.append(pack_params(informed, include_c=include_c))
    if config.n_random_starts > 0:
        rng = spawn_rng(config.seed)
        for _ in range(config.n_random_starts):
            starts.append(pack_params(random_init(rng, L, m), include_c=include_c))
    if not starts:
        starts.append(pack_params(ModelParams.zeros(L, m), include_c=include_c))

    objective = flat_objective(X, Yp, spec, config.activation, include_c=include_c)
    best = None
    failures = []
    for idx, x0 in enumerate(starts):
        try:
            res = minimize(objective, x0, config.optimizer)
        except OptimizerError as err:
            failures.append(f"start {idx}: {err}")
            continue
        if best is None or res.f < best[0]:
            best = (res.f, idx, res)
    if best is None:
        raise FitError(
            "all starts failed: " + "; ".join(failures)
        )

    params = unpack_params(best[2].x, L, m, include_c=include_c)
    return FittedModel(
        params=params,
        label_order=order,
        activation=config.activation,
        loss_spec=spec,
        training_loss=best[0],
        n_starts_used=len(starts),
        method="ccn",
        flags=_degenerate_label_flags(Yp, spec.lam),
    )


def fit_br(dataset, config):
    """Binary relevance: independent penalized logistic regressions.

    Each label minimizes the q = 1 network loss restricted to its own bias
    and weights (BCE, ridge lam / r), so the result coincides with a
    frozen-dependency joint fit.
    """
    X, Yp, order = _prologue(dataset, config)
    spec = LossSpec(kind="bce", q=1.0, lam=config.loss_spec.lam)
    n, m = X.shape
    L = Yp.shape[1]
    r = L * m + L * (L - 1) // 2
    b = np.zeros(L)
    W = np.zeros((L, m))
    for l in range(L):
        b[l], W[l] = _fit_stage(
            X, Yp[:, l], spec, 1.0 / (n * L), spec.lam / r, config.optimizer
        )
    params = ModelParams(b=b, W=W, C=np.zeros((L, L)))
    return FittedModel(
        params=params,
        label_order=order,
        activation=SIGMOID,
        loss_spec=spec,
        training_loss=model.loss(params, X, Yp, spec, SIGMOID),
        n_starts_used=1,
        method="br",
        flags=_degenerate_label_flags(Yp, spec.lam),
    )


def fit_cc(dataset, config, propagation="probability"):
    """Classic chain baseline: stagewise fits with propagated predictions.

    Stage l uses the features plus the in-sample fitted outputs of earlier
    stages (probabilities or thresholded predictions, per ``propagation``);
    prediction propagates the same kind of output computed from test
    features.
    """
    if propagation not in ("probability", "binary"):
        raise ValidationError(f"unknown propagation {propagation!r}")
    X, Yp, order = _prologue(dataset, config)
    spec = config.loss_spec
    if not spec.probabilistic:
        raise ValidationError("chain stages require a probabilistic loss kind")
    params = _stagewise_params(X, Yp, spec, config.optimizer, propagation)
    if propagation == "probability":
        training_loss = model.loss(params, X, Yp, spec, SIGMOID)
        mode = "network"
    else:
        p, _ = _binary_chain_forward(params, X)
        training_loss = _aggregate_probabilistic(p, Yp, spec, params)
        mode = "binary-chain"
    return FittedModel(
        params=params,
        label_order=order,
        activation=SIGMOID,
        loss_spec=spec,
        training_loss=training_loss,
        n_starts_used=1,
        method="cc",
        propagation=mode,
        flags=_degenerate_label_flags(Yp, spec.lam),
    )


def _aggregate_probabilistic(P, Y, spec, params):
    """Eq-style aggregate of probabilistic per-label losses at fixed P."""
    Pc = np.clip(P, model.CLIP_EPS, 1.0 - model.CLIP_EPS)
    h = np.where(
        Y == 1.0,
        (1.0 - Pc) ** spec.xi_plus * -np.log(Pc),
        Pc**spec.xi_minus * -np.log1p(-Pc),
    )
    n, L = Y.shape
    agg = np.sum(np.sum(h**spec.q, axis=1) ** (1.0 / spec.q))
    r = L * params.n_features + L * (L - 1) // 2
    pen = np.sum(params.W**2) + np.sum(params.C**2)
    return float(agg / (n * L ** (1.0 / spec.q)) + spec.lam / r * pen)


def informed_init(dataset, config):
    """Starting point for the joint fit: the greedy probability-mode chain.

    The stage coefficients on earlier outputs populate the dependency rows,
    reproducing exactly the initialization stage of :func:`fit_ccn`.
    """
    if not config.loss_spec.probabilistic:
        raise ValidationError("informed initialization requires a probabilistic loss")
    X, Yp, _ = _prologue(dataset, config)
    return _stagewise_params(
        X, Yp, config.loss_spec, config.optimizer, "probability",
        with_dependencies=not config.freeze_c,
    )
