"""Shared fixtures and independent reference implementations.

The reference helpers here deliberately avoid the library's fast paths:
finite differences instead of analytic Jacobians, fresh summation and an
explicit matrix inverse instead of prefix sums and Cholesky solves. Tests
compare the two.
"""

from __future__ import annotations

import numpy as np
import pytest

from momentcpt import get_model, model_names

# Interior parameter points used for grid checks, per model.
THETA_GRID = {
    "gamma": [
        (0.3, 0.2),
        (0.5, 1.0),
        (1.0, 0.01),
        (1.0, 1.0),
        (1.5, 0.7),
        (2.0, 1.0),
        (2.5, 3.0),
        (4.0, 0.5),
        (5.0, 2.0),
        (8.0, 1.3),
        (10.0, 10.0),
    ],
    "exponential": [
        (0.01,),
        (0.1,),
        (0.5,),
        (1.0,),
        (1.7,),
        (2.0,),
        (3.3,),
        (5.0,),
        (10.0,),
        (50.0,),
    ],
    "normal": [
        (-3.0, 0.5),
        (-1.0, 2.0),
        (0.0, 1.0),
        (0.0, 0.04),
        (0.5, 5.0),
        (1.0, 1.0),
        (2.0, 0.25),
        (4.0, 3.0),
        (10.0, 0.5),
        (-7.5, 1.5),
    ],
    "poisson": [
        (0.2,),
        (0.5,),
        (1.0,),
        (2.0,),
        (3.5,),
        (5.0,),
        (8.0,),
        (12.0,),
        (20.0,),
        (40.0,),
    ],
    "bernoulli": [
        (0.05,),
        (0.1,),
        (0.2,),
        (0.3,),
        (0.4,),
        (0.5,),
        (0.6,),
        (0.75,),
        (0.9,),
        (0.95,),
    ],
}

# Sampling parameters that keep random data clear of domain edges, used
# when a test just needs "some data from each model".
SAFE_THETA = {
    "gamma": (1.5, 0.8),
    "exponential": (1.3,),
    "normal": (0.5, 2.0),
    "poisson": (4.0,),
    "bernoulli": (0.4,),
}


@pytest.fixture(params=model_names())
def model(request):
    return get_model(request.param)


def finite_difference_jacobian(fn, theta, step=1e-5):
    """Central-difference Jacobian of fn at theta, per-coordinate steps."""
    theta = np.asarray(theta, dtype=float)
    base = np.asarray(fn(theta), dtype=float)
    jac = np.empty((base.size, theta.size))
    for j in range(theta.size):
        h = step * max(1.0, abs(theta[j]))
        hi = theta.copy()
        lo = theta.copy()
        hi[j] += h
        lo[j] -= h
        jac[:, j] = (np.asarray(fn(hi), float) - np.asarray(fn(lo), float)) / (
            2.0 * h
        )
    return jac


def brute_force_path(data, model, theta, sigma):
    """Statistic path via fresh summation and an explicit inverse."""
    data = np.asarray(data, dtype=float)
    n = data.shape[0]
    moments = np.asarray(model.psi(data), dtype=float)
    mean = np.asarray(model.mean(theta), dtype=float)
    inv = np.linalg.inv(np.asarray(sigma, dtype=float))
    out = np.empty(n + 1)
    for k in range(n + 1):
        z = (moments[:k].sum(axis=0) - k * mean) / n
        out[k] = n * (z @ inv @ z)
    return out


def sample_from(model, theta, n, rng):
    return model.sample(theta, rng, n)
