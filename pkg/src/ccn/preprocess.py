"""Feature preprocessing: column standardization and PCA.

The PCA operates on the correlation matrix (the covariance of the
standardized columns, computed with the n-1 convention) and keeps the
smallest number of components whose cumulative explained variance reaches
the requested fraction.  Fitted transforms serialize to a plain dict so
they can be stored and reapplied to held-out data.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numkit import sym_eig

__all__ = ["FeatureTransform", "fit_transform", "apply_transform"]


@dataclass
class FeatureTransform:
    means: np.ndarray
    sds: np.ndarray
    components: object = None    # (k, m) rows, or None when PCA is off
    eigenvalues: object = None
    variance_fraction: object = None

    @property
    def n_components(self):
        return None if self.components is None else self.components.shape[0]

    def to_dict(self):
        doc = {
            "schema_version": 1,
            "means": self.means.tolist(),
            "sds": self.sds.tolist(),
        }
        if self.components is not None:
            doc["components"] = self.components.tolist()
            doc["eigenvalues"] = self.eigenvalues.tolist()
            doc["variance_fraction"] = self.variance_fraction
        return doc

    @classmethod
    def from_dict(cls, doc):
        if doc.get("schema_version") != 1:
            raise ValidationError("unsupported transform schema version")
        components = doc.get("components")
        return cls(
            means=np.asarray(doc["means"], dtype=float),
            sds=np.asarray(doc["sds"], dtype=float),
            components=None if components is None
            else np.asarray(components, dtype=float),
            eigenvalues=None if components is None
            else np.asarray(doc["eigenvalues"], dtype=float),
            variance_fraction=doc.get("variance_fraction"),
        )


def fit_transform(X, pca_variance=None, column_names=None):
    """Fit standardization (and optionally PCA) on the columns of X.

    ``pca_variance`` is the explained-variance fraction to retain; None
    means standardize only.  Constant columns are rejected by name.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError("need a 2-D matrix with at least two rows")
    means = X.mean(axis=0)
    sds = X.std(axis=0, ddof=1)
    for j, sd in enumerate(sds):
        if sd == 0.0:
            name = column_names[j] if column_names else f"column {j + 1}"
            raise ValidationError(f"cannot standardize constant {name}")
    if pca_variance is None:
        return FeatureTransform(means=means, sds=sds)
    if not 0.0 < pca_variance <= 1.0:
        raise ValidationError("variance fraction must be in (0, 1]")
    Z = (X - means) / sds
    corr = Z.T @ Z / (X.shape[0] - 1)
    eigenvalues, vectors = sym_eig(corr)
    eigenvalues = np.maximum(eigenvalues, 0.0)
    cumulative = np.cumsum(eigenvalues) / np.sum(eigenvalues)
    k = int(np.searchsorted(cumulative, pca_variance - 1e-12) + 1)
    k = min(k, X.shape[1])
    components = vectors[:, :k].T.copy()
    # canonical sign: largest-magnitude entry of each component positive
    for row in components:
        pivot = np.argmax(np.abs(row))
        if row[pivot] < 0.0:
            row *= -1.0
    return FeatureTransform(
        means=means,
        sds=sds,
        components=components,
        eigenvalues=eigenvalues[:k].copy(),
        variance_fraction=float(pca_variance),
    )


def apply_transform(transform, X):
    """Standardize (and project, when PCA was fitted) the columns of X."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != transform.means.shape[0]:
        raise ValidationError(
            f"X has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"transform expects {transform.means.shape[0]}"
        )
    Z = (X - transform.means) / transform.sds
    if transform.components is None:
        return Z
    return Z @ transform.components.T
