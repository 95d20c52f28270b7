"""Moment models: parametric families described through moments of a map psi.

A :class:`MomentModel` bundles everything the change point machinery needs to
know about a family of distributions: the moment map ``psi`` applied to each
observation, the curve ``mean(theta) = E_theta[psi(X)]`` together with its
Jacobian, the covariance of ``psi(X)`` under theta, a sampler, and (when one
exists in closed form) the inverse of the mean curve.

Five families ship with the package and are available by name through
:func:`get_model`: ``gamma``, ``exponential``, ``normal``, ``poisson`` and
``bernoulli``. User-defined models are plain :class:`MomentModel` instances
and get the same treatment everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import OutOfDomain, SingularJacobian

__all__ = [
    "MomentModel",
    "get_model",
    "model_names",
    "gamma_model",
    "exponential_model",
    "normal_model",
    "poisson_model",
    "bernoulli_model",
    "asymptotic_covariance",
    "affine_transform",
]

# Relative threshold below which a Jacobian or covariance eigenvalue is
# treated as zero (condition number above 1e12).
_COND_EPS = 1e-12


@dataclass(frozen=True)
class MomentModel:
    """A parametric family seen through the moments of a map ``psi``.

    Attributes
    ----------
    name : str
        Identifier used in registries, reports and CLI output.
    dim : int
        Dimension of ``psi(x)`` and of the parameter vector theta.
    param_domain : tuple of (float, float)
        Open interval per parameter coordinate; ``math.inf`` marks an
        unbounded side.
    psi : callable
        Maps a data vector of shape ``(n,)`` to an ``(n, dim)`` array.
    mean : callable
        ``theta -> E_theta[psi(X)]`` as a ``(dim,)`` array.
    jacobian : callable
        ``theta -> d mean / d theta`` as a ``(dim, dim)`` array.
    cov : callable
        ``theta -> Cov_theta(psi(X))`` as a ``(dim, dim)`` array.
    sampler : callable
        ``(theta, rng, size) -> (size,)`` array of draws from the family.
    inverse_mean : callable, optional
        Closed-form inverse of ``mean``. Raises
        :class:`~momentcpt.errors.OutOfDomain` when the moment vector has no
        preimage inside ``param_domain``.
    init_guess : callable, optional
        Maps a moment vector to a starting point for the Newton solver when
        no closed-form inverse is available (or it has been removed).
    """

    name: str
    dim: int
    param_domain: tuple[tuple[float, float], ...]
    psi: Callable[[np.ndarray], np.ndarray]
    mean: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    cov: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[np.ndarray, np.random.Generator, int], np.ndarray]
    inverse_mean: Optional[Callable[[np.ndarray], np.ndarray]] = None
    init_guess: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def contains(self, theta) -> bool:
        """True when theta lies strictly inside the parameter domain."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim,) or not np.all(np.isfinite(theta)):
            return False
        return all(
            lo < t < hi for t, (lo, hi) in zip(theta, self.param_domain)
        )

    def require(self, theta) -> np.ndarray:
        """Return theta as an array, raising OutOfDomain when outside."""
        arr = np.asarray(theta, dtype=float)
        if not self.contains(arr):
            raise OutOfDomain(
                f"theta {arr!r} outside the domain of model {self.name!r}"
            )
        return arr

    def sample(self, theta, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` observations after validating theta."""
        arr = self.require(theta)
        return np.asarray(self.sampler(arr, rng, int(size)), dtype=float)


def gamma_model() -> MomentModel:
    """Gamma family parameterized by shape and rate, theta = (alpha, lam).

    Uses psi(x) = (x, x^2). The first two raw moments are alpha/lam and
    alpha(alpha+1)/lam^2; the closed-form inverse is alpha = m1^2/(m2 - m1^2)
    and lam = m1/(m2 - m1^2).
    """

    def psi(x):
        x = np.asarray(x, dtype=float)
        return np.column_stack((x, x * x))

    def mean(theta):
        a, lam = np.asarray(theta, dtype=float)
        return np.array([a / lam, a * (a + 1.0) / lam**2])

    def jacobian(theta):
        a, lam = np.asarray(theta, dtype=float)
        return np.array(
            [
                [1.0 / lam, -a / lam**2],
                [(2.0 * a + 1.0) / lam**2, -2.0 * a * (a + 1.0) / lam**3],
            ]
        )

    def cov(theta):
        a, lam = np.asarray(theta, dtype=float)
        c11 = a / lam**2
        c12 = 2.0 * a * (a + 1.0) / lam**3
        c22 = 2.0 * a * (a + 1.0) * (2.0 * a + 3.0) / lam**4
        return np.array([[c11, c12], [c12, c22]])

    def sampler(theta, rng, size):
        a, lam = theta
        return rng.gamma(shape=a, scale=1.0 / lam, size=size)

    def inverse_mean(m):
        m1, m2 = float(m[0]), float(m[1])
        var = m2 - m1 * m1
        if m1 <= 0.0 or var <= 0.0:
            raise OutOfDomain(
                "moment vector has no gamma preimage "
                f"(m1={m1!r}, m2-m1^2={var!r})"
            )
        return np.array([m1 * m1 / var, m1 / var])

    return MomentModel(
        name="gamma",
        dim=2,
        param_domain=((0.0, math.inf), (0.0, math.inf)),
        psi=psi,
        mean=mean,
        jacobian=jacobian,
        cov=cov,
        sampler=sampler,
        inverse_mean=inverse_mean,
        init_guess=inverse_mean,
    )


def exponential_model() -> MomentModel:
    """Exponential family with rate parameter, theta = (lam,).

    Uses psi(x) = (x,); the mean curve is 1/lam.
    """

    def psi(x):
        return np.asarray(x, dtype=float)[:, None]

    def mean(theta):
        lam = float(np.asarray(theta, dtype=float)[0])
        return np.array([1.0 / lam])

    def jacobian(theta):
        lam = float(np.asarray(theta, dtype=float)[0])
        return np.array([[-1.0 / lam**2]])

    def cov(theta):
        lam = float(np.asarray(theta, dtype=float)[0])
        return np.array([[1.0 / lam**2]])

    def sampler(theta, rng, size):
        return rng.exponential(scale=1.0 / theta[0], size=size)

    def inverse_mean(m):
        m1 = float(m[0])
        if m1 <= 0.0:
            raise OutOfDomain(f"mean {m1!r} has no exponential preimage")
        return np.array([1.0 / m1])

    return MomentModel(
        name="exponential",
        dim=1,
        param_domain=((0.0, math.inf),),
        psi=psi,
        mean=mean,
        jacobian=jacobian,
        cov=cov,
        sampler=sampler,
        inverse_mean=inverse_mean,
        init_guess=inverse_mean,
    )


def normal_model() -> MomentModel:
    """Normal family, theta = (mu, var) with var > 0.

    Uses psi(x) = (x, x^2), so mean(theta) = (mu, var + mu^2).
    """

    def psi(x):
        x = np.asarray(x, dtype=float)
        return np.column_stack((x, x * x))

    def mean(theta):
        mu, var = np.asarray(theta, dtype=float)
        return np.array([mu, var + mu * mu])

    def jacobian(theta):
        mu, _ = np.asarray(theta, dtype=float)
        return np.array([[1.0, 0.0], [2.0 * mu, 1.0]])

    def cov(theta):
        mu, var = np.asarray(theta, dtype=float)
        c12 = 2.0 * mu * var
        return np.array(
            [[var, c12], [c12, 2.0 * var**2 + 4.0 * mu**2 * var]]
        )

    def sampler(theta, rng, size):
        mu, var = theta
        return rng.normal(loc=mu, scale=math.sqrt(var), size=size)

    def inverse_mean(m):
        m1, m2 = float(m[0]), float(m[1])
        var = m2 - m1 * m1
        if var <= 0.0:
            raise OutOfDomain(
                f"moment vector implies non-positive variance {var!r}"
            )
        return np.array([m1, var])

    return MomentModel(
        name="normal",
        dim=2,
        param_domain=((-math.inf, math.inf), (0.0, math.inf)),
        psi=psi,
        mean=mean,
        jacobian=jacobian,
        cov=cov,
        sampler=sampler,
        inverse_mean=inverse_mean,
        init_guess=inverse_mean,
    )


def poisson_model() -> MomentModel:
    """Poisson family, theta = (lam,), psi(x) = (x,)."""

    def psi(x):
        return np.asarray(x, dtype=float)[:, None]

    def mean(theta):
        lam = float(np.asarray(theta, dtype=float)[0])
        return np.array([lam])

    def jacobian(theta):
        return np.array([[1.0]])

    def cov(theta):
        lam = float(np.asarray(theta, dtype=float)[0])
        return np.array([[lam]])

    def sampler(theta, rng, size):
        return rng.poisson(lam=theta[0], size=size)

    def inverse_mean(m):
        m1 = float(m[0])
        if m1 <= 0.0:
            raise OutOfDomain(f"mean {m1!r} has no poisson preimage")
        return np.array([m1])

    return MomentModel(
        name="poisson",
        dim=1,
        param_domain=((0.0, math.inf),),
        psi=psi,
        mean=mean,
        jacobian=jacobian,
        cov=cov,
        sampler=sampler,
        inverse_mean=inverse_mean,
        init_guess=inverse_mean,
    )


def bernoulli_model() -> MomentModel:
    """Bernoulli family, theta = (p,) with 0 < p < 1, psi(x) = (x,)."""

    def psi(x):
        return np.asarray(x, dtype=float)[:, None]

    def mean(theta):
        p = float(np.asarray(theta, dtype=float)[0])
        return np.array([p])

    def jacobian(theta):
        return np.array([[1.0]])

    def cov(theta):
        p = float(np.asarray(theta, dtype=float)[0])
        return np.array([[p * (1.0 - p)]])

    def sampler(theta, rng, size):
        return rng.binomial(1, theta[0], size=size)

    def inverse_mean(m):
        p = float(m[0])
        if not 0.0 < p < 1.0:
            raise OutOfDomain(f"mean {p!r} has no bernoulli preimage")
        return np.array([p])

    return MomentModel(
        name="bernoulli",
        dim=1,
        param_domain=((0.0, 1.0),),
        psi=psi,
        mean=mean,
        jacobian=jacobian,
        cov=cov,
        sampler=sampler,
        inverse_mean=inverse_mean,
        init_guess=inverse_mean,
    )


_REGISTRY: dict[str, Callable[[], MomentModel]] = {
    "gamma": gamma_model,
    "exponential": exponential_model,
    "normal": normal_model,
    "poisson": poisson_model,
    "bernoulli": bernoulli_model,
}


def model_names() -> tuple[str, ...]:
    """Names of the built-in families."""
    return tuple(sorted(_REGISTRY))


def get_model(name: str) -> MomentModel:
    """Look up a built-in family by name.

    Raises
    ------
    ValueError
        If ``name`` is not a registered family.
    """
    try:
        factory = _REGISTRY[name]
    except KeyError:
        known = ", ".join(model_names())
        raise ValueError(f"unknown model {name!r}; available: {known}") from None
    return factory()


def asymptotic_covariance(model: MomentModel, theta) -> np.ndarray:
    """Covariance of the limiting normal law of the rescaled estimator error.

    For the method of moments estimator this is
    ``J^{-1} C J^{-T}`` with ``J = model.jacobian(theta)`` and
    ``C = model.cov(theta)``.

    Raises
    ------
    SingularJacobian
        If the Jacobian's smallest singular value is below ``1e-12`` times
        its largest.
    """
    theta = model.require(theta)
    jac = np.asarray(model.jacobian(theta), dtype=float)
    svals = np.linalg.svd(jac, compute_uv=False)
    if svals[0] <= 0.0 or svals[-1] <= _COND_EPS * svals[0]:
        raise SingularJacobian(
            f"jacobian of model {model.name!r} at {theta!r} is singular"
        )
    c = np.asarray(model.cov(theta), dtype=float)
    half = np.linalg.solve(jac, c)
    out = np.linalg.solve(jac, half.T).T
    return (out + out.T) / 2.0


def affine_transform(model: MomentModel, a, b) -> MomentModel:
    """Model observing ``x`` through ``a @ psi(x) + b`` instead of ``psi(x)``.

    ``a`` must be an invertible ``(dim, dim)`` matrix and ``b`` a ``(dim,)``
    vector. Parameterization, domain and sampler are unchanged; only the
    moment map and its derived quantities transform.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != (model.dim, model.dim) or b.shape != (model.dim,):
        raise ValueError("transform shapes do not match the model dimension")
    svals = np.linalg.svd(a, compute_uv=False)
    if svals[0] <= 0.0 or svals[-1] <= _COND_EPS * svals[0]:
        raise ValueError("transform matrix is numerically singular")
    a_inv = np.linalg.inv(a)

    base_psi = model.psi
    base_mean = model.mean
    base_jac = model.jacobian
    base_cov = model.cov
    base_inverse = model.inverse_mean
    base_guess = model.init_guess

    def psi(x):
        return base_psi(x) @ a.T + b

    def mean(theta):
        return a @ base_mean(theta) + b

    def jacobian(theta):
        return a @ base_jac(theta)

    def cov(theta):
        return a @ base_cov(theta) @ a.T

    def pullback(fn):
        if fn is None:
            return None

        def wrapped(m):
            return fn(a_inv @ (np.asarray(m, dtype=float) - b))

        return wrapped

    return MomentModel(
        name=f"{model.name}~affine",
        dim=model.dim,
        param_domain=model.param_domain,
        psi=psi,
        mean=mean,
        jacobian=jacobian,
        cov=cov,
        sampler=model.sampler,
        inverse_mean=pullback(base_inverse),
        init_guess=pullback(base_guess),
    )
