"""Partial-sum process of estimating equations and the change point test.

For observations ``X_1..X_n`` and a moment model, the process

    Z_n(u, theta) = (1/n) * sum_{k <= floor(u n)} (psi(X_k) - mean(theta))

vanishes at ``u = 0`` and, when theta is the full-sample moment estimate, at
``u = 1`` as well. The test statistic is the largest quadratic form

    T_n = n * max_k  Z_n(k/n, theta_hat)' S^{-1} Z_n(k/n, theta_hat)

with ``S`` the plug-in covariance of ``psi(X)``. Large values indicate that
the moments of the sample are not homogeneous in time; the maximizing index
estimates the change location.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import SingularCovariance
from .estimator import MMEResult, mme
from .models import MomentModel, _COND_EPS

__all__ = [
    "ZProcessState",
    "TestReport",
    "build_state",
    "z_at",
    "sigma_hat",
    "t_path",
    "run_test",
    "detect",
    "change_point",
]


def _floor_index(u: float, n: int) -> int:
    # floor(u*n) with a guard against products like 0.29*100 = 28.999...996;
    # u within 1e-9 of a grid point snaps up.
    k = int(u * n + 1e-9)
    return min(max(k, 0), n)


@dataclass(frozen=True)
class ZProcessState:
    """Prefix sums of the moment map over one sample.

    ``prefix[k]`` holds ``sum_{j <= k} psi(X_j)``; row 0 is zero and row n
    divided by n is the sample moment vector.
    """

    n: int
    dim: int
    prefix: np.ndarray


def build_state(data, model: MomentModel) -> ZProcessState:
    """Precompute prefix sums of ``psi`` so any Z_n(u, theta) is O(dim)."""
    data = np.asarray(data, dtype=float)
    if data.ndim != 1 or data.shape[0] == 0:
        raise ValueError("data must be a non-empty one-dimensional array")
    moments = np.asarray(model.psi(data), dtype=float)
    n = moments.shape[0]
    prefix = np.zeros((n + 1, model.dim))
    np.cumsum(moments, axis=0, out=prefix[1:])
    return ZProcessState(n=n, dim=model.dim, prefix=prefix)


def z_at(state: ZProcessState, u: float, theta, model: MomentModel) -> np.ndarray:
    """Evaluate ``Z_n(u, theta) = (S_k - k * mean(theta)) / n``, k=floor(un)."""
    if not 0.0 <= u <= 1.0:
        raise ValueError(f"u must lie in [0, 1], got {u!r}")
    k = _floor_index(float(u), state.n)
    mean = np.asarray(model.mean(theta), dtype=float)
    return (state.prefix[k] - k * mean) / state.n


def sigma_hat(data, theta, model: MomentModel) -> np.ndarray:
    """Plug-in covariance ``(1/n) sum_k (psi(X_k) - mean(theta)) (...)'' ``.

    With theta the full-sample moment estimate this is the (biased, 1/n)
    sample covariance of ``psi(X)``.

    Raises
    ------
    SingularCovariance
        If the result has condition number above 1e12.
    """
    data = np.asarray(data, dtype=float)
    moments = np.asarray(model.psi(data), dtype=float)
    centered = moments - np.asarray(model.mean(theta), dtype=float)
    sigma = centered.T @ centered / moments.shape[0]
    sigma = (sigma + sigma.T) / 2.0
    eigs = np.linalg.eigvalsh(sigma)
    if eigs[-1] <= 0.0 or eigs[0] <= _COND_EPS * eigs[-1]:
        raise SingularCovariance(
            "plug-in covariance of psi(X) is numerically singular"
        )
    return sigma


def t_path(
    state: ZProcessState,
    theta,
    sigma: np.ndarray,
    model: MomentModel,
    ridge: float = 0.0,
) -> np.ndarray:
    """Statistic path ``t[k] = n * Z_n(k/n)' (sigma + ridge I)^{-1} Z_n(k/n)``.

    Returns an array of length ``n + 1`` with ``t[0] == 0`` and, when theta
    solves the estimating equation, ``t[n] == 0`` up to the solver residual.
    Entries are clamped at zero against sub-1e-12 negative rounding.
    """
    mean = np.asarray(model.mean(theta), dtype=float)
    n = state.n
    z = (state.prefix - np.outer(np.arange(n + 1), mean)) / n

    sigma = np.asarray(sigma, dtype=float)
    if ridge < 0.0:
        raise ValueError("ridge must be non-negative")
    if ridge > 0.0:
        sigma = sigma + ridge * np.eye(state.dim)
    eigs = np.linalg.eigvalsh(sigma)
    if eigs[-1] <= 0.0 or eigs[0] <= _COND_EPS * eigs[-1]:
        raise SingularCovariance(
            "covariance is numerically singular; pass a ridge or check the data"
        )
    chol = np.linalg.cholesky(sigma)
    white = solve_triangular(chol, z.T, lower=True)
    path = n * np.einsum("ik,ik->k", white, white)
    return np.maximum(path, 0.0)


@dataclass(frozen=True)
class TestReport:
    """Everything produced by one run of the change point test.

    ``u_hat = k_hat / n`` locates the largest statistic value; it is reported
    whether or not the test rejects (flagged by ``reject``). ``level`` and
    ``critical_value`` are None for estimation-only runs.
    """

    __test__ = False  # keeps pytest from collecting this despite the name

    n: int
    theta_hat: np.ndarray
    sigma_hat: np.ndarray
    t_path: np.ndarray
    t_stat: float
    level: float | None
    critical_value: float | None
    reject: bool
    u_hat: float
    k_hat: int


def _analyze(data, model: MomentModel, ridge: float):
    data = np.asarray(data, dtype=float)
    if data.ndim != 1:
        raise ValueError("data must be one-dimensional")
    if data.shape[0] < model.dim + 2:
        raise ValueError(
            f"need at least {model.dim + 2} observations, got {data.shape[0]}"
        )
    estimate: MMEResult = mme(data, model)
    sigma = sigma_hat(data, estimate.theta, model)
    state = build_state(data, model)
    path = t_path(state, estimate.theta, sigma, model, ridge=ridge)
    k_hat = int(np.argmax(path))
    return data, estimate, sigma, path, k_hat


def run_test(
    data,
    model: MomentModel,
    level: float = 0.05,
    critical_value: float | None = None,
    table=None,
    ridge: float = 0.0,
) -> TestReport:
    """Run the change point test on one sample.

    Parameters
    ----------
    data : array_like
        Observations, shape ``(n,)`` with ``n >= dim + 2``.
    model : MomentModel
    level : float
        Test level in (0, 1).
    critical_value : float, optional
        Explicit threshold; when omitted it is looked up for
        ``(model.dim, level)`` in ``table`` (or the packaged table).
    table : optional
        Table mapping, path, or None for the packaged default; forwarded to
        :func:`momentcpt.limits.lookup_critical_value`.
    ridge : float
        Non-negative diagonal inflation added to the plug-in covariance
        before inversion. Off (0.0) by default.
    """
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    if critical_value is None:
        from .limits import lookup_critical_value

        critical_value = lookup_critical_value(model.dim, level, table)
    data, estimate, sigma, path, k_hat = _analyze(data, model, ridge)
    t_stat = float(path[k_hat])
    return TestReport(
        n=data.shape[0],
        theta_hat=estimate.theta,
        sigma_hat=sigma,
        t_path=path,
        t_stat=t_stat,
        level=level,
        critical_value=float(critical_value),
        reject=bool(t_stat > critical_value),
        u_hat=k_hat / data.shape[0],
        k_hat=k_hat,
    )


def detect(data, model: MomentModel, ridge: float = 0.0) -> TestReport:
    """Estimation-only variant of :func:`run_test`: locate, never reject.

    The report carries the full statistic path and the maximizing index but
    ``level`` and ``critical_value`` are None and ``reject`` is False.
    """
    data, estimate, sigma, path, k_hat = _analyze(data, model, ridge)
    return TestReport(
        n=data.shape[0],
        theta_hat=estimate.theta,
        sigma_hat=sigma,
        t_path=path,
        t_stat=float(path[k_hat]),
        level=None,
        critical_value=None,
        reject=False,
        u_hat=k_hat / data.shape[0],
        k_hat=k_hat,
    )


def change_point(report: TestReport) -> tuple[float, int]:
    """Smallest maximizer of the statistic path as ``(u_hat, k_hat)``."""
    k_hat = int(np.argmax(report.t_path))
    return k_hat / report.n, k_hat
