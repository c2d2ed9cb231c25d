import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ccn.model import Dataset, LossSpec, ModelParams


def random_params(rng, L, m, scale=0.8):
    b = rng.normal(0.0, scale, size=L)
    W = rng.normal(0.0, scale, size=(L, m))
    C = np.tril(rng.normal(0.0, scale, size=(L, L)), -1)
    return ModelParams(b, W, C)


def random_dataset(rng, n, m, L):
    X = rng.normal(size=(n, m))
    Y = (rng.random((n, L)) < 0.5).astype(float)
    return Dataset(X, Y)


def spec_battery():
    """One spec per loss kind, with its paired activation."""
    return [
        (LossSpec(kind="bce"), "sigmoid"),
        (LossSpec(kind="focal", xi_plus=2.0, xi_minus=2.0), "sigmoid"),
        (LossSpec(kind="asymmetric", xi_plus=1.0, xi_minus=3.0), "sigmoid"),
        (LossSpec(kind="huber-hinge", kappa=0.5), "identity"),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
