"""Shared fixtures and independent oracle helpers.

The helpers here deliberately avoid the library's own code paths: the
ridge oracle goes through explicitly formed normal equations, gradients
and Hessians come from central finite differences, and the exhaustive
minimum uses plain itertools enumeration. Tests compare the library
against these.
"""

import itertools

import numpy as np
import pytest

from sslsq import Dataset


def make_dataset(rng, n_labeled=8, n_unlabeled=5, n_features=3):
    """Random dense dataset with both classes present when possible."""
    labeled = rng.standard_normal((n_labeled, n_features))
    labels = (rng.random(n_labeled) < 0.5).astype(float)
    if n_labeled >= 2:
        labels[0], labels[1] = 0.0, 1.0
    unlabeled = rng.standard_normal((n_unlabeled, n_features))
    return Dataset(labeled, labels, unlabeled)


def normal_equation_ridge(features, targets, lam):
    """Independent ridge solve via explicitly assembled normal equations."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    gram = X.T @ X + lam * np.eye(X.shape[1])
    return np.linalg.solve(gram, X.T @ y)


def central_gradient(fn, x, step=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        bump = np.zeros_like(x)
        bump[i] = step
        grad[i] = (fn(x + bump) - fn(x - bump)) / (2.0 * step)
    return grad


def central_hessian(fn, x, step=1e-4):
    """Central finite-difference Hessian of a scalar function."""
    x = np.asarray(x, dtype=float)
    n = x.size
    hessian = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = step
            ej[j] = step
            hessian[i, j] = (
                fn(x + ei + ej) - fn(x + ei - ej) - fn(x - ei + ej) + fn(x - ei - ej)
            ) / (4.0 * step * step)
    return hessian


def exhaustive_hard_minimum(data, lam, objective, solve):
    """Plain-loop enumeration of all binary labelings (independent oracle)."""
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=data.n_unlabeled):
        q = np.array(bits)
        w = solve(data, q, lam)
        value = objective(data, w, q, lam)
        if best is None or value < best[2]:
            best = (q, w, value)
    return best


def relative_error(actual, expected):
    actual = np.asarray(actual, dtype=float)
    expected = np.asarray(expected, dtype=float)
    scale = max(1.0, float(np.max(np.abs(expected))) if expected.size else 0.0)
    return float(np.max(np.abs(actual - expected))) / scale if actual.size else 0.0


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
