"""Synthetic data generating processes with known ground truth.

Every built-in design draws features from a zero-mean multivariate normal
with variance 2.0 and covariance 0.4, pushes them through the chained
network with the sigmoid activation, and samples binary labels from the
resulting probabilities.  In the default (probabilistic) realization all
label probabilities are computed before any label is drawn, so
interdependencies flow through probabilities; the sequential realization
draws each label first and propagates the binary outcome instead.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, ValidationError
from .model import Dataset, ModelParams, forward
from .model import _stable_sigmoid
from .numkit import cholesky, mvn_sample

__all__ = [
    "SimDesign",
    "RandomDgpSpec",
    "BUILTIN_DESIGNS",
    "builtin_design",
    "generate",
    "random_dgp",
    "latent_probability_curves",
]

_SIGMA3 = np.array([
    [2.0, 0.4, 0.4],
    [0.4, 2.0, 0.4],
    [0.4, 0.4, 2.0],
])


@dataclass
class SimDesign:
    """A named data generating process with its true parameters."""

    name: str
    params: ModelParams
    sigma: np.ndarray
    realization: str = "probabilistic"
    post_transform: str = "none"
    n: int = 200

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.realization not in ("probabilistic", "sequential"):
            raise ValidationError(f"unknown realization {self.realization!r}")
        if self.post_transform not in ("none", "reverse_labels"):
            raise ValidationError(f"unknown post transform {self.post_transform!r}")

    @property
    def n_labels(self):
        return self.params.n_labels

    @property
    def n_features(self):
        return self.params.n_features

    def to_dict(self):
        L = self.params.n_labels
        rows, cols = np.tril_indices(L, -1)
        return {
            "schema_version": 1,
            "name": self.name,
            "realization": self.realization,
            "post_transform": self.post_transform,
            "n": self.n,
            "b": self.params.b.tolist(),
            "W": {"rows": L, "cols": self.params.n_features,
                  "data": self.params.W.ravel().tolist()},
            "C": [[int(k) + 1, int(l) + 1, float(self.params.C[k, l])]
                  for k, l in zip(rows, cols)],
            "sigma": self.sigma.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        if doc.get("schema_version") != 1:
            raise ValidationError("unsupported design schema version")
        L = len(doc["b"])
        W = np.asarray(doc["W"]["data"], dtype=float).reshape(
            doc["W"]["rows"], doc["W"]["cols"]
        )
        C = np.zeros((L, L))
        for k, l, value in doc["C"]:
            C[int(k) - 1, int(l) - 1] = float(value)
        return cls(
            name=doc["name"],
            params=ModelParams(np.asarray(doc["b"], dtype=float), W, C),
            sigma=np.asarray(doc["sigma"], dtype=float),
            realization=doc["realization"],
            post_transform=doc["post_transform"],
            n=int(doc["n"]),
        )


def _strong_params():
    b = np.array([1.0, 3.0, 0.5])
    W = np.array([
        [2.0, 0.0, 0.0],
        [1.0, 0.0, 0.0],
        [-0.5, 0.0, 0.0],
    ])
    C = np.zeros((3, 3))
    C[1, 0] = -6.0
    C[2, 0] = 2.0
    C[2, 1] = -4.0
    return ModelParams(b, W, C)


def _weak_params():
    b = np.array([1.0, -2.5, -0.5])
    W = np.array([
        [2.0, 0.0, 0.0],
        [2.0, 0.0, 0.0],
        [-3.0, 0.0, 0.0],
    ])
    C = np.zeros((3, 3))
    C[1, 0] = 1.0
    C[2, 0] = 2.5
    C[2, 1] = -3.0
    return ModelParams(b, W, C)


def _six_label_params():
    b = np.array([1.0, 3.0, 0.5, 0.0, 0.0, 0.0])
    W = np.zeros((6, 3))
    W[:, 0] = [2.0, 1.0, -0.5, -1.0, -3.0, 1.0]
    C = np.zeros((6, 6))
    C[1, 0] = -4.0
    C[2, 0] = -1.0
    C[3, :3] = [4.0, -2.0, -2.0]
    C[4, 1:4] = [-2.0, -6.0, 6.0]
    C[5, 2] = 6.0
    C[5, 4] = -6.0
    return ModelParams(b, W, C)


def _increased_params():
    # strong 3-label block stacked on the 6-label block; no cross-block
    # dependencies (the full lower triangle stays free for estimators)
    s = _strong_params()
    six = _six_label_params()
    b = np.concatenate([s.b, six.b])
    W = np.vstack([s.W, six.W])
    C = np.zeros((9, 9))
    C[:3, :3] = s.C
    C[3:, 3:] = six.C
    return ModelParams(b, W, C)


def builtin_design(name):
    """The named data generating process with its exact built-in parameters."""
    if name == "strong":
        return SimDesign("strong", _strong_params(), _SIGMA3)
    if name == "weak":
        return SimDesign("weak", _weak_params(), _SIGMA3)
    if name == "six-label":
        return SimDesign("six-label", _six_label_params(), _SIGMA3)
    if name == "reversed":
        return SimDesign("reversed", _six_label_params(), _SIGMA3,
                         post_transform="reverse_labels")
    if name == "sequential":
        return SimDesign("sequential", _six_label_params(), _SIGMA3,
                         realization="sequential")
    if name == "increased":
        return SimDesign("increased", _increased_params(), _SIGMA3)
    raise ValidationError(f"unknown design {name!r}")


BUILTIN_DESIGNS = ("strong", "weak", "six-label", "reversed", "sequential",
                   "increased")


def generate(design, rng, n=None):
    """Draw a dataset from the design; also returns the latent probabilities.

    Returns ``(Dataset, P)`` where P holds the per-label probabilities used
    for the Bernoulli draws, with any post transform applied to both.
    """
    n = design.n if n is None else int(n)
    params = design.params
    L = params.n_labels
    G = cholesky(design.sigma)
    X = mvn_sample(rng, np.zeros(params.n_features), G, n)
    if design.realization == "probabilistic":
        P = forward(params, X, "sigmoid").p
        Y = (rng.random((n, L)) < P).astype(float)
    else:
        P = np.empty((n, L))
        Y = np.empty((n, L))
        for l in range(L):
            t = params.b[l] + X @ params.W[l]
            if l > 0:
                t = t + Y[:, :l] @ params.C[l, :l]
            P[:, l] = _stable_sigmoid(t)
            Y[:, l] = (rng.random(n) < P[:, l]).astype(float)
    if design.post_transform == "reverse_labels":
        P = P[:, ::-1].copy()
        Y = Y[:, ::-1].copy()
    return Dataset(X, Y), P


def _majority_frequencies(params, rng, probe_n):
    G = cholesky(_SIGMA3)
    X = mvn_sample(rng, np.zeros(params.n_features), G, probe_n)
    P = forward(params, X, "sigmoid").p
    Y = rng.random(P.shape) < P
    freq = Y.mean(axis=0)
    return np.maximum(freq, 1.0 - freq)


@dataclass
class RandomDgpSpec:
    """Random six-label process: parameters drawn from N(0, param_sd^2).

    Candidate parameter sets are rejected until no label's majority class
    exceeds ``imbalance_cap`` over a ``probe_n``-draw probe.
    """

    L: int = 6
    param_sd: float = 4.0
    imbalance_cap: float = 0.85
    seed: int = 0
    probe_n: int = 10_000
    max_rejections: int = 1000

    def __post_init__(self):
        if self.param_sd <= 0.0:
            raise ValidationError("param_sd must be positive")
        if not 0.5 < self.imbalance_cap <= 1.0:
            raise ValidationError("imbalance_cap must be in (0.5, 1]")


def random_dgp(spec, rng):
    """Draw a random design, keeping the sparsity of the built-in blocks.

    Only the first feature column of W carries signal, matching the
    six-label design the randomization is based on.
    """
    L, m = spec.L, 3
    for _ in range(spec.max_rejections):
        b = rng.normal(0.0, spec.param_sd, size=L)
        W = np.zeros((L, m))
        W[:, 0] = rng.normal(0.0, spec.param_sd, size=L)
        C = np.zeros((L, L))
        rows, cols = np.tril_indices(L, -1)
        C[rows, cols] = rng.normal(0.0, spec.param_sd, size=rows.size)
        params = ModelParams(b, W, C)
        worst = _majority_frequencies(params, rng, spec.probe_n).max()
        if worst <= spec.imbalance_cap:
            return SimDesign("random_dgp", params, _SIGMA3)
    raise GenerationError(
        f"no parameter draw satisfied the {spec.imbalance_cap:.2f} imbalance cap "
        f"within {spec.max_rejections} attempts"
    )


def latent_probability_curves(design, x1_grid):
    """Latent label probabilities along x1 with the other features at zero."""
    x1_grid = np.asarray(x1_grid, dtype=float)
    X = np.zeros((x1_grid.size, design.n_features))
    X[:, 0] = x1_grid
    return forward(design.params, X, "sigmoid").p
