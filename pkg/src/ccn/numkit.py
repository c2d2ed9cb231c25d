"""Numerical substrate: factorizations, sampling, and special functions.

Everything here is deterministic given its inputs.  Random draws go through
numpy's PCG64 generator; seeds map to streams via ``SeedSequence`` so that
derived streams (per repetition, per fold) are reproducible across runs and
independent of any parallel execution layout.
"""

import math

import numpy as np

from .errors import FactorizationError, ValidationError

__all__ = [
    "make_rng",
    "spawn_rng",
    "derive_seed",
    "cholesky",
    "sym_eig",
    "mvn_sample",
    "chi2_sf_1dof",
]


def make_rng(seed):
    """Return a seeded PCG64 generator. Equal seeds give equal streams."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def spawn_rng(seed, *key):
    """Derive an independent generator from ``seed`` and an integer key path.

    The mapping is the documented splitting rule for parallel work: stream
    identity depends only on ``(seed, *key)``, never on scheduling order.
    """
    entropy = (int(seed),) + tuple(int(k) for k in key)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed, *key):
    """Hash ``(seed, *key)`` into a plain integer seed (same splitting rule)."""
    entropy = (int(seed),) + tuple(int(k) for k in key)
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _check_square_symmetric(a, tol=1e-12):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix contains non-finite entries")
    scale = max(1.0, np.abs(a).max()) if a.size else 1.0
    if a.size and np.abs(a - a.T).max() > tol * scale:
        raise ValidationError("matrix is not symmetric within tolerance")
    return a


def cholesky(a):
    """Lower-triangular G with G @ G.T == a for symmetric positive definite a.

    Raises FactorizationError naming the failing pivot index when ``a`` is
    not positive definite.
    """
    a = _check_square_symmetric(a)
    n = a.shape[0]
    g = np.zeros_like(a)
    for j in range(n):
        d = a[j, j] - g[j, :j] @ g[j, :j]
        if d <= 0.0 or not np.isfinite(d):
            raise FactorizationError(j, d)
        g[j, j] = math.sqrt(d)
        if j + 1 < n:
            g[j + 1 :, j] = (a[j + 1 :, j] - g[j + 1 :, :j] @ g[j, :j]) / g[j, j]
    return g


def sym_eig(a):
    """Eigenvalues (descending) and orthonormal eigenvectors of symmetric a.

    Returns ``(w, v)`` with ``a @ v[:, k] == w[k] * v[:, k]``.
    """
    a = _check_square_symmetric(a)
    w, v = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


def mvn_sample(rng, mean, chol_lower, n):
    """Draw ``n`` rows from N(mean, G G^T) given the lower factor G.

    Each row is ``mean + G @ z`` with z i.i.d. standard normal.
    """
    mean = np.asarray(mean, dtype=float)
    g = np.asarray(chol_lower, dtype=float)
    if mean.ndim != 1 or g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValidationError("mean must be a vector and chol_lower a square matrix")
    if g.shape[0] != mean.shape[0]:
        raise ValidationError(
            f"dimension mismatch: mean has length {mean.shape[0]}, "
            f"factor is {g.shape[0]}x{g.shape[1]}"
        )
    if n < 0:
        raise ValidationError("n must be nonnegative")
    z = rng.standard_normal((int(n), mean.shape[0]))
    return mean + z @ g.T


def chi2_sf_1dof(x):
    """Survival function of the chi-square distribution with 1 dof.

    P(X > x) = erfc(sqrt(x / 2)) for x >= 0.
    """
    x = float(x)
    if not np.isfinite(x) or x < 0.0:
        raise ValidationError(f"chi-square statistic must be >= 0, got {x}")
    return math.erfc(math.sqrt(0.5 * x))
