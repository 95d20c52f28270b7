"""Method of moments estimation.

The estimator solves ``mean(theta) = average of psi(X_k)``. Families with a
closed-form ``inverse_mean`` use it directly; otherwise a damped Newton
iteration inverts the mean curve numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSample, NoConvergence, OutOfDomain, SingularJacobian
from .models import MomentModel, _COND_EPS

__all__ = ["MMEResult", "mme", "newton_solve"]

# Interior offset applied to finite domain edges when clipping Newton
# iterates; infinite edges are replaced by a large box.
_EDGE_PAD = 1e-8
_BOX_LIMIT = 1e8


@dataclass(frozen=True)
class MMEResult:
    """Outcome of a moment estimation.

    Attributes
    ----------
    theta : ndarray
        Estimated parameter vector.
    residual_norm : float
        Euclidean norm of ``mean(theta) - target``.
    iterations : int
        Newton iterations used (0 for the closed-form path).
    method : str
        ``"closed_form"`` or ``"newton"``.
    """

    theta: np.ndarray
    residual_norm: float
    iterations: int
    method: str


def _newton_box(model: MomentModel) -> tuple[np.ndarray, np.ndarray]:
    lo = np.empty(model.dim)
    hi = np.empty(model.dim)
    for i, (a, b) in enumerate(model.param_domain):
        lo[i] = a + _EDGE_PAD if math.isfinite(a) else -_BOX_LIMIT
        hi[i] = b - _EDGE_PAD if math.isfinite(b) else _BOX_LIMIT
    return lo, hi


def newton_solve(
    target,
    model: MomentModel,
    theta_init,
    tol: float = 1e-10,
    max_iter: int = 100,
    max_halvings: int = 40,
) -> MMEResult:
    """Solve ``model.mean(theta) = target`` by damped Newton iteration.

    Steps are halved until the residual norm decreases and the iterate stays
    strictly inside the parameter domain (finite edges padded by 1e-8). An
    initial point that already meets tolerance is returned unchanged with
    ``iterations == 0``.

    Raises
    ------
    SingularJacobian
        If the Jacobian at an iterate is numerically singular.
    NoConvergence
        If no acceptable step exists or the iteration budget runs out.
    OutOfDomain
        If ``theta_init`` is outside the domain.
    """
    target = np.asarray(target, dtype=float)
    theta = model.require(theta_init).copy()
    lo, hi = _newton_box(model)
    scale = 1.0 + float(np.linalg.norm(target))

    residual = np.asarray(model.mean(theta), dtype=float) - target
    res_norm = float(np.linalg.norm(residual))
    for iteration in range(max_iter):
        if res_norm <= tol * scale:
            return MMEResult(theta, res_norm, iteration, "newton")
        jac = np.asarray(model.jacobian(theta), dtype=float)
        svals = np.linalg.svd(jac, compute_uv=False)
        if svals[0] <= 0.0 or svals[-1] <= _COND_EPS * svals[0]:
            raise SingularJacobian(
                f"singular jacobian for model {model.name!r} at {theta!r}"
            )
        step = np.linalg.solve(jac, residual)
        accepted = False
        damping = 1.0
        for _ in range(max_halvings + 1):
            candidate = theta - damping * step
            if np.all(candidate >= lo) and np.all(candidate <= hi):
                cand_res = np.asarray(model.mean(candidate), dtype=float) - target
                cand_norm = float(np.linalg.norm(cand_res))
                if cand_norm < res_norm:
                    theta, residual, res_norm = candidate, cand_res, cand_norm
                    accepted = True
                    break
            damping /= 2.0
        if not accepted:
            raise NoConvergence(
                f"newton stalled for model {model.name!r} at {theta!r} "
                f"(residual {res_norm:.3e})"
            )
    if res_norm <= tol * scale:
        return MMEResult(theta, res_norm, max_iter, "newton")
    raise NoConvergence(
        f"newton did not reach tolerance in {max_iter} iterations "
        f"(residual {res_norm:.3e})"
    )


def mme(data, model: MomentModel, theta_init=None) -> MMEResult:
    """Method of moments estimate from a full sample.

    Solves ``mean(theta) = psi-bar`` where ``psi-bar`` is the sample average
    of ``psi(X_k)``. The returned residual always satisfies
    ``residual_norm <= 1e-8 * (1 + |psi-bar|)``.

    Parameters
    ----------
    data : array_like
        Observations, shape ``(n,)`` with ``n >= dim + 1``.
    model : MomentModel
    theta_init : array_like, optional
        Starting point for the Newton path; ignored when the model has a
        closed-form ``inverse_mean``.

    Raises
    ------
    DegenerateSample
        If the sample covariance of ``psi(X)`` is singular (condition number
        above 1e12), e.g. for constant data.
    OutOfDomain
        If the implied estimate leaves the parameter domain.
    NoConvergence, SingularJacobian
        Propagated from the Newton path.
    ValueError
        If the sample is shorter than ``dim + 1`` or no starting point is
        available for a model without ``inverse_mean``.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 1:
        raise ValueError("data must be one-dimensional")
    n = data.shape[0]
    if n < model.dim + 1:
        raise ValueError(
            f"need at least {model.dim + 1} observations, got {n}"
        )
    moments = np.asarray(model.psi(data), dtype=float)
    psi_bar = moments.mean(axis=0)
    centered = moments - psi_bar
    sample_cov = centered.T @ centered / n
    eigs = np.linalg.eigvalsh(sample_cov)
    if eigs[-1] <= 0.0 or eigs[0] <= _COND_EPS * eigs[-1]:
        raise DegenerateSample(
            "sample covariance of psi(X) is singular; the data do not "
            "identify the model"
        )

    if model.inverse_mean is not None:
        theta = np.asarray(model.inverse_mean(psi_bar), dtype=float)
        theta = model.require(theta)
        residual = float(
            np.linalg.norm(np.asarray(model.mean(theta), dtype=float) - psi_bar)
        )
        result = MMEResult(theta, residual, 0, "closed_form")
    else:
        if theta_init is None:
            if model.init_guess is None:
                raise ValueError(
                    f"model {model.name!r} has no inverse_mean or init_guess; "
                    "pass theta_init"
                )
            theta_init = model.init_guess(psi_bar)
        result = newton_solve(psi_bar, model, theta_init)

    bound = 1e-8 * (1.0 + float(np.linalg.norm(psi_bar)))
    if result.residual_norm > bound:
        raise NoConvergence(
            f"estimating equation residual {result.residual_norm:.3e} "
            f"exceeds {bound:.3e}"
        )
    return result
