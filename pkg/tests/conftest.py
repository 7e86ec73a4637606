"""Shared synthetic-data helpers and fixtures."""

import numpy as np
import pytest

from addkern.dataset import (Dataset, PRESCALED, from_arrays,
                             minmax_to_quarter_box, prescale, zscore_normalize)


def make_raw(n, d, seed=0, correlated=False):
    """Raw synthetic regression data with a mild additive signal."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    if correlated and d >= 4:
        X[:, 1] = 0.9 * X[:, 0] + 0.1 * X[:, 1]
    y = np.sin(X[:, 0]) + 0.5 * X[:, min(1, d - 1)] + 0.1 * rng.normal(size=n)
    return from_arrays(X, y)


def make_quarter(n, d, seed=0, **kw):
    return minmax_to_quarter_box(zscore_normalize(make_raw(n, d, seed, **kw)))


def make_prescaled(n, d, d_max, seed=0, **kw):
    ds, _ = prescale(make_quarter(n, d, seed, **kw), d_max, 1.0)
    return ds


def direct_prescaled(n, d, d_max, seed=0):
    """Prescaled-state dataset built directly from uniform coordinates."""
    rng = np.random.default_rng(seed)
    X = rng.uniform(-0.25, 0.25, size=(n, d)) / np.sqrt(d_max)
    y = rng.normal(size=n)
    return Dataset(X, y, tuple(f"x{i + 1}" for i in range(d)),
                   scaling_state=PRESCALED, d_max=d_max)


def pairwise_additive_raw(n, seed=0, noise=0.1, distractors=2):
    """y = g(x1, x2) + g(x3, x4) + eps with g(a, b) = sin(pi * a * b)."""
    rng = np.random.default_rng(seed)
    d = 4 + distractors
    X = rng.uniform(-1.0, 1.0, size=(n, d))
    y = (np.sin(np.pi * X[:, 0] * X[:, 1])
         + np.sin(np.pi * X[:, 2] * X[:, 3])
         + noise * rng.normal(size=n))
    return from_arrays(X, y)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
