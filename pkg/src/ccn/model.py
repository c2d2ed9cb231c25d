"""The chained probabilistic network: forward pass, loss, and gradient.

A model over L labels holds a bias vector ``b``, an L x m weight matrix
``W``, and a strictly lower-triangular L x L dependency matrix ``C``.  Label
probabilities are produced in chain order: the prediction for label l feeds,
scaled by ``C[k, l]``, into the pre-activation of every later label k.

Per-label losses are aggregated per observation with an lq norm and averaged,
plus a ridge penalty on W and C:

    loss = (1 / (n L^(1/q))) sum_i (sum_l h_il^q)^(1/q)
           + (lam / r) (|W|^2 + |C|^2)

with r the number of free entries of W and C, i.e. L*m + L(L-1)/2.  Per-label
losses are kept as magnitudes (h >= 0), which is what the lq norm consumes.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ValidationError

__all__ = [
    "SIGMOID",
    "IDENTITY",
    "ACTIVATIONS",
    "LOSS_KINDS",
    "Dataset",
    "ModelParams",
    "LossSpec",
    "ForwardCache",
    "forward",
    "per_label_loss",
    "loss",
    "loss_and_gradient",
    "gradient",
    "predict",
    "pack_params",
    "unpack_params",
    "n_free_params",
]

SIGMOID = "sigmoid"
IDENTITY = "identity"
ACTIVATIONS = (SIGMOID, IDENTITY)

LOSS_KINDS = ("bce", "focal", "asymmetric", "huber-hinge")
_PROBABILISTIC_KINDS = ("bce", "focal", "asymmetric")

CLIP_EPS = _kernels.CLIP_EPS


def _as_float_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got ndim={a.ndim}")
    return a


@dataclass
class Dataset:
    """Feature matrix X (n x m) paired with a binary label matrix Y (n x L)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        self.X = _as_float_matrix(self.X, "X")
        self.Y = _as_float_matrix(self.Y, "Y")
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValidationError(
                f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]}"
            )
        if not np.all(np.isfinite(self.X)):
            raise ValidationError("X contains non-finite values")
        if self.Y.size and not np.isin(self.Y, (0.0, 1.0)).all():
            raise ValidationError("Y must contain only 0/1 values")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def n_labels(self):
        return self.Y.shape[1]


@dataclass
class ModelParams:
    """Bias vector b (L,), weights W (L, m), dependencies C (L, L).

    C is strictly lower triangular: C[k, l] is the effect of label l on the
    later label k.  The diagonal and upper triangle are structurally zero.
    """

    b: np.ndarray
    W: np.ndarray
    C: np.ndarray

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        self.W = _as_float_matrix(self.W, "W")
        self.C = _as_float_matrix(self.C, "C")
        L = self.b.shape[0]
        if self.b.ndim != 1:
            raise ValidationError("b must be a vector")
        if self.W.shape[0] != L:
            raise ValidationError(
                f"W has {self.W.shape[0]} rows, expected {L} (one per label)"
            )
        if self.C.shape != (L, L):
            raise ValidationError(f"C must be {L}x{L}, got {self.C.shape}")
        for arr, name in ((self.b, "b"), (self.W, "W"), (self.C, "C")):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")
        if np.any(np.triu(self.C) != 0.0):
            raise ValidationError("C must be strictly lower triangular")

    @property
    def n_labels(self):
        return self.b.shape[0]

    @property
    def n_features(self):
        return self.W.shape[1]

    @property
    def n_free(self):
        return n_free_params(self.n_labels, self.n_features)

    @classmethod
    def zeros(cls, L, m):
        return cls(np.zeros(L), np.zeros((L, m)), np.zeros((L, L)))

    def copy(self):
        return ModelParams(self.b.copy(), self.W.copy(), self.C.copy())


@dataclass
class LossSpec:
    """Per-label loss family plus aggregation and penalty parameters.

    kind       one of "bce", "focal", "asymmetric", "huber-hinge"
    xi_plus    focusing exponent for positive labels (focal/asymmetric)
    xi_minus   focusing exponent for negative labels
    kappa      Huber hinge smoothing parameter (> -1)
    q          lq aggregation exponent (>= 1)
    lam        ridge penalty strength (>= 0)
    """

    kind: str = "bce"
    xi_plus: float = 0.0
    xi_minus: float = 0.0
    kappa: float = 1.0
    q: float = 1.0
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValidationError(f"unknown loss kind {self.kind!r}")
        if self.q < 1.0:
            raise ValidationError("q must be >= 1")
        if self.lam < 0.0:
            raise ValidationError("lam must be >= 0")
        if self.kappa <= -1.0:
            raise ValidationError("kappa must be > -1")
        if self.xi_plus < 0.0 or self.xi_minus < 0.0:
            raise ValidationError("xi_plus and xi_minus must be >= 0")
        if self.kind == "bce" and (self.xi_plus != 0.0 or self.xi_minus != 0.0):
            raise ValidationError("bce requires xi_plus = xi_minus = 0")
        if self.kind == "focal" and self.xi_plus != self.xi_minus:
            raise ValidationError("focal requires xi_plus = xi_minus")

    @property
    def probabilistic(self):
        return self.kind in _PROBABILISTIC_KINDS

    @property
    def default_activation(self):
        return SIGMOID if self.probabilistic else IDENTITY

    def _kernel_args(self):
        if self.probabilistic:
            return _kernels.LOSS_PROBABILISTIC, self.xi_plus, self.xi_minus, self.kappa
        return _kernels.LOSS_HUBER_HINGE, self.xi_plus, self.xi_minus, self.kappa


@dataclass
class ForwardCache:
    """Pre-activations theta and predictions p, both n x L."""

    theta: np.ndarray
    p: np.ndarray


def n_free_params(L, m):
    """Free parameter count: L biases, L*m weights, L(L-1)/2 dependencies."""
    return L * (m + 1) + L * (L - 1) // 2


def _check_activation(activation):
    if activation not in ACTIVATIONS:
        raise ValidationError(f"unknown activation {activation!r}")


def _check_pairing(spec, activation):
    _check_activation(activation)
    paired = SIGMOID if spec.probabilistic else IDENTITY
    if activation != paired:
        raise ValidationError(
            f"loss kind {spec.kind!r} pairs with the {paired} activation, "
            f"got {activation!r}"
        )


def _stable_sigmoid(t):
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def forward(params, X, activation):
    """Evaluate the chain strictly in label order; returns a ForwardCache."""
    _check_activation(activation)
    X = _as_float_matrix(X, "X")
    L, m = params.n_labels, params.n_features
    if X.shape[1] != m:
        raise ValidationError(f"X has {X.shape[1]} columns, model expects {m}")
    n = X.shape[0]
    theta = np.empty((n, L))
    p = np.empty((n, L))
    for l in range(L):
        t = params.b[l] + X @ params.W[l]
        if l > 0:
            t = t + p[:, :l] @ params.C[l, :l]
        theta[:, l] = t
        p[:, l] = _stable_sigmoid(t) if activation == SIGMOID else t
    return ForwardCache(theta=theta, p=p)


def per_label_loss(spec, y, p):
    """Magnitude of the per-label loss h for a single (label, prediction) pair.

    Probabilistic kinds clip p into [CLIP_EPS, 1 - CLIP_EPS] first; the
    Huber hinge takes p unbounded and works on the margin (2y - 1) p.
    """
    y = float(y)
    p = float(p)
    if y not in (0.0, 1.0):
        raise ValidationError("y must be 0 or 1")
    if spec.probabilistic:
        p = min(max(p, CLIP_EPS), 1.0 - CLIP_EPS)
        if y == 1.0:
            return (1.0 - p) ** spec.xi_plus * -np.log(p)
        return p**spec.xi_minus * -np.log1p(-p)
    u = (2.0 * y - 1.0) * p
    if u <= -spec.kappa:
        return 1.0 - u - 0.5 * (spec.kappa + 1.0)
    return max(0.0, 1.0 - u) ** 2 / (2.0 * (spec.kappa + 1.0))


def _validate_fit_arrays(params, X, Y):
    X = _as_float_matrix(X, "X")
    Y = _as_float_matrix(Y, "Y")
    L, m = params.n_labels, params.n_features
    if X.shape[1] != m:
        raise ValidationError(f"X has {X.shape[1]} columns, model expects {m}")
    if Y.shape != (X.shape[0], L):
        raise ValidationError(
            f"Y has shape {Y.shape}, expected ({X.shape[0]}, {L})"
        )
    if X.shape[0] < 1:
        raise ValidationError("need at least one observation")
    return np.ascontiguousarray(X), np.ascontiguousarray(Y)


def loss_and_gradient(params, X, Y, spec, activation):
    """Objective value and gradients (db, dW, dC) in one fused evaluation."""
    _check_pairing(spec, activation)
    X, Y = _validate_fit_arrays(params, X, Y)
    n = X.shape[0]
    L, m = params.n_labels, params.n_features
    r = L * m + L * (L - 1) // 2
    x = pack_params(params)
    kind, xp, xm, kappa = spec._kernel_args()
    act = _kernels.ACT_SIGMOID if activation == SIGMOID else _kernels.ACT_IDENTITY
    f, g = _kernels.value_grad(
        x, X, Y, L, float(spec.q), 1.0 / (n * L ** (1.0 / spec.q)),
        spec.lam / r, kind, float(xp), float(xm), float(kappa), act, True,
    )
    gp = unpack_params(g, L, m)
    return f, (gp.b, gp.W, gp.C)


def loss(params, X, Y, spec, activation):
    """Value of the aggregated penalized loss."""
    f, _ = loss_and_gradient(params, X, Y, spec, activation)
    return f


def gradient(params, X, Y, spec, activation):
    """Analytic gradient (db, dW, dC) of the aggregated penalized loss."""
    _, g = loss_and_gradient(params, X, Y, spec, activation)
    return g


def predict(params, X, activation, threshold=None):
    """Binary predictions; ties at the threshold resolve to positive.

    Sigmoid thresholds p at 0.5, identity thresholds the margin at 0.
    """
    cache = forward(params, X, activation)
    if threshold is None:
        threshold = 0.5 if activation == SIGMOID else 0.0
    return (cache.p >= threshold).astype(np.int64)


def pack_params(params, include_c=True):
    """Flatten (b, W, C) into the kernel layout."""
    parts = [params.b.ravel(), params.W.ravel()]
    if include_c:
        L = params.n_labels
        rows, cols = np.tril_indices(L, -1)
        parts.append(params.C[rows, cols])
    return np.concatenate(parts) if parts else np.zeros(0)


def unpack_params(x, L, m, include_c=True):
    """Inverse of :func:`pack_params`."""
    x = np.asarray(x, dtype=float)
    n_c = L * (L - 1) // 2 if include_c else 0
    expected = L + L * m + n_c
    if x.shape != (expected,):
        raise ValidationError(f"flat vector has shape {x.shape}, expected ({expected},)")
    b = x[:L].copy()
    W = x[L : L + L * m].reshape(L, m).copy()
    C = np.zeros((L, L))
    if include_c:
        rows, cols = np.tril_indices(L, -1)
        C[rows, cols] = x[L + L * m :]
    return ModelParams(b=b, W=W, C=C)


class KernelObjective:
    """Callable (value, gradient) objective backed by the compiled kernel.

    ``kernel_args`` lets the optimizer run its compiled driver instead of
    the generic Python loop; both implement the same algorithm.
    """

    __slots__ = ("kernel_args",)

    def __init__(self, kernel_args):
        self.kernel_args = kernel_args

    def __call__(self, x):
        return _kernels.value_grad(np.asarray(x, dtype=float), *self.kernel_args)


def flat_objective(X, Y, spec, activation, include_c=True, loss_scale=None, ridge=None):
    """Objective mapping a flat parameter vector to (value, gradient).

    ``loss_scale`` and ``ridge`` default to the network convention
    (1 / (n L^(1/q)) and lam / r); stagewise fits override them.
    """
    _check_pairing(spec, activation)
    X = np.ascontiguousarray(np.asarray(X, dtype=float))
    Y = np.ascontiguousarray(np.asarray(Y, dtype=float))
    n, m = X.shape
    L = Y.shape[1]
    if n < 1:
        raise ValidationError("need at least one observation")
    r = L * m + L * (L - 1) // 2
    if loss_scale is None:
        loss_scale = 1.0 / (n * L ** (1.0 / spec.q))
    if ridge is None:
        ridge = spec.lam / r if r else 0.0
    kind, xp, xm, kappa = spec._kernel_args()
    act = _kernels.ACT_SIGMOID if activation == SIGMOID else _kernels.ACT_IDENTITY
    return KernelObjective((
        X, Y, int(L), float(spec.q), float(loss_scale), float(ridge),
        int(kind), float(xp), float(xm), float(kappa), int(act), bool(include_c),
    ))
