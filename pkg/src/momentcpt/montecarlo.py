"""Monte Carlo experiment harness and theoretical quantities under a change.

Experiments draw samples with or without a single change point, run the test
on each replication with independent seeded streams, and aggregate rejection
rates and change point location statistics. Companion helpers expose the
population quantities that govern behavior under a fixed alternative: the
pseudo-true parameter, the mixture covariance, and the deterministic drift
toward which the partial-sum process concentrates.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import EstimationError, SingularCovariance
from .estimator import mme, newton_solve
from .limits import lookup_critical_value
from .models import MomentModel, get_model
from .zprocess import _floor_index, build_state, run_test

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "AlternativeOracle",
    "ConsistencyRow",
    "ConsistencyDiagnostics",
    "run_experiment",
    "alternative_oracle",
    "consistency_diagnostics",
    "sup_zn_gap",
    "sup_zn_convergence_check",
    "load_config",
    "validate_config",
]

# Replications per worker task; fixed so aggregates do not depend on `jobs`.
_MC_CHUNK = 250


@dataclass(frozen=True)
class ExperimentConfig:
    """One simulation experiment.

    ``theta1`` and ``ustar`` must be supplied together: replications then
    draw ``floor(ustar * n)`` observations under ``theta0`` and the rest
    under ``theta1``. Without them the sample is homogeneous and the
    experiment measures test size instead of power.
    """

    model: str
    theta0: tuple[float, ...]
    n: int
    m: int
    level: float = 0.05
    seed: int = 0
    ustar: float | None = None
    theta1: tuple[float, ...] | None = None
    histogram_bins: int = 50
    record_replications: bool = False

    def __post_init__(self):
        object.__setattr__(self, "theta0", tuple(float(t) for t in self.theta0))
        if self.theta1 is not None:
            object.__setattr__(
                self, "theta1", tuple(float(t) for t in self.theta1)
            )
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError("config key 'n': must be a positive integer")
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError("config key 'm': must be a positive integer")
        if not 0.0 < self.level < 1.0:
            raise ValueError("config key 'level': must lie in (0, 1)")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("config key 'seed': must be a non-negative integer")
        if self.histogram_bins < 0:
            raise ValueError("config key 'histogram_bins': must be >= 0")
        if (self.theta1 is None) != (self.ustar is None):
            raise ValueError(
                "config keys 'theta1' and 'ustar' must be given together"
            )
        if self.ustar is not None and not 0.0 < self.ustar < 1.0:
            raise ValueError("config key 'ustar': must lie in (0, 1)")
        if self.theta1 is not None and self.theta1 == self.theta0:
            raise ValueError(
                "config key 'theta1': must differ from theta0 "
                "(omit both theta1 and ustar for a no-change experiment)"
            )

    @property
    def has_change(self) -> bool:
        return self.theta1 is not None


def validate_config(config: ExperimentConfig) -> MomentModel:
    """Resolve the model and run the model-dependent config checks."""
    try:
        model = get_model(config.model)
    except ValueError as exc:
        raise ValueError(f"config key 'model': {exc}") from None
    if not model.contains(config.theta0):
        raise ValueError(
            f"config key 'theta0': {config.theta0!r} outside the domain "
            f"of model {config.model!r}"
        )
    if config.theta1 is not None and not model.contains(config.theta1):
        raise ValueError(
            f"config key 'theta1': {config.theta1!r} outside the domain "
            f"of model {config.model!r}"
        )
    if config.n < model.dim + 2:
        raise ValueError(
            f"config key 'n': need at least {model.dim + 2} observations "
            f"for model {config.model!r}"
        )
    return model


@dataclass(frozen=True)
class ExperimentResult:
    """Aggregates over the completed replications of one experiment.

    Location statistics (mean, sd, RMSE of the estimated change fraction)
    are computed over all completed replications of a change experiment,
    not only the rejecting ones, and are None for no-change experiments.
    Replications that fail with an estimation error are excluded from the
    aggregates and counted in ``failure_counts``.
    """

    config: ExperimentConfig
    critical_value: float
    n_completed: int
    n_failed: int
    failure_counts: dict[str, int]
    rejection_rate: float
    u_hat_mean: float | None
    u_hat_sd: float | None
    u_hat_rmse: float | None
    histogram_edges: np.ndarray | None
    histogram_counts: np.ndarray | None
    u_hats: np.ndarray | None = None
    t_stats: np.ndarray | None = None
    rejects: np.ndarray | None = None


def _simulate_sample(model, theta0, theta1, ustar, n, rng) -> np.ndarray:
    if theta1 is None:
        return model.sample(theta0, rng, n)
    n_head = _floor_index(float(ustar), n)
    head = model.sample(theta0, rng, n_head)
    tail = model.sample(theta1, rng, n - n_head)
    return np.concatenate([head, tail])


def _run_chunk(task):
    (model_name, theta0, theta1, ustar, n, level, crit, seeds) = task
    model = get_model(model_name)
    count = len(seeds)
    u_hats = np.full(count, np.nan)
    t_stats = np.full(count, np.nan)
    rejects = np.zeros(count, dtype=bool)
    failures: Counter[str] = Counter()
    for i, seed_seq in enumerate(seeds):
        rng = np.random.default_rng(seed_seq)
        data = _simulate_sample(model, theta0, theta1, ustar, n, rng)
        try:
            report = run_test(data, model, level=level, critical_value=crit)
        except EstimationError as exc:
            failures[type(exc).__name__] += 1
            continue
        u_hats[i] = report.u_hat
        t_stats[i] = report.t_stat
        rejects[i] = report.reject
    return u_hats, t_stats, rejects, failures


def _location_stats(u_ok: np.ndarray, ustar: float):
    count = u_ok.size
    mean = math.fsum(u_ok) / count
    if count > 1:
        var = math.fsum((u - mean) ** 2 for u in u_ok) / (count - 1)
    else:
        var = 0.0
    rmse = math.sqrt(math.fsum((u - ustar) ** 2 for u in u_ok) / count)
    return mean, math.sqrt(var), rmse


def run_experiment(
    config: ExperimentConfig, jobs: int = 1, table=None
) -> ExperimentResult:
    """Run ``config.m`` seeded replications and aggregate them.

    Replication streams are spawned from ``SeedSequence([seed, n])``, so the
    result is reproducible for a fixed config and identical for any ``jobs``
    value. ``table`` is forwarded to the critical value lookup.
    """
    model = validate_config(config)
    crit = lookup_critical_value(model.dim, config.level, table)
    children = np.random.SeedSequence([config.seed, config.n]).spawn(config.m)
    tasks = [
        (
            config.model,
            config.theta0,
            config.theta1,
            config.ustar,
            config.n,
            config.level,
            crit,
            children[i : i + _MC_CHUNK],
        )
        for i in range(0, config.m, _MC_CHUNK)
    ]
    jobs = max(1, int(jobs))
    if jobs == 1 or len(tasks) == 1:
        parts = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            parts = list(pool.map(_run_chunk, tasks))

    u_hats = np.concatenate([p[0] for p in parts])
    t_stats = np.concatenate([p[1] for p in parts])
    rejects = np.concatenate([p[2] for p in parts])
    failures: Counter[str] = Counter()
    for p in parts:
        failures.update(p[3])

    ok = ~np.isnan(u_hats)
    n_completed = int(ok.sum())
    n_failed = config.m - n_completed
    if n_completed == 0:
        raise EstimationError(
            f"all {config.m} replications failed: {dict(failures)!r}"
        )
    rejection_rate = int(rejects[ok].sum()) / n_completed

    u_ok = u_hats[ok]
    if config.has_change:
        u_mean, u_sd, u_rmse = _location_stats(u_ok, config.ustar)
    else:
        u_mean = u_sd = u_rmse = None

    if config.histogram_bins > 0:
        counts, edges = np.histogram(
            u_ok, bins=config.histogram_bins, range=(0.0, 1.0)
        )
    else:
        counts = edges = None

    return ExperimentResult(
        config=config,
        critical_value=crit,
        n_completed=n_completed,
        n_failed=n_failed,
        failure_counts=dict(failures),
        rejection_rate=rejection_rate,
        u_hat_mean=u_mean,
        u_hat_sd=u_sd,
        u_hat_rmse=u_rmse,
        histogram_edges=edges,
        histogram_counts=counts,
        u_hats=u_hats if config.record_replications else None,
        t_stats=t_stats if config.record_replications else None,
        rejects=rejects if config.record_replications else None,
    )


@dataclass(frozen=True)
class AlternativeOracle:
    """Population quantities for a fixed single-change alternative.

    ``theta_star`` solves ``mean(theta) = ustar * mean(theta0) +
    (1 - ustar) * mean(theta1)``; it is the long-run value of the full-sample
    estimate. ``sigma_star`` is the same mixture of the two covariances and
    ``lambda_star`` the smallest eigenvalue of its inverse. ``drift(u)`` is
    the deterministic tent-shaped limit of the partial-sum process, maximal
    at ``u = ustar``.
    """

    model_name: str
    ustar: float
    theta_star: np.ndarray
    sigma_star: np.ndarray
    lambda_star: float
    mean_gap: np.ndarray

    def drift(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        scale = np.where(
            u <= self.ustar, u * (1.0 - self.ustar), self.ustar * (1.0 - u)
        )
        return scale[..., None] * self.mean_gap

    def detection_bound(self, n: int) -> float:
        """Leading term of the statistic's growth under this alternative."""
        gap_sq = float(self.mean_gap @ self.mean_gap)
        return (
            n
            * self.ustar**2
            * (1.0 - self.ustar) ** 2
            * self.lambda_star
            * gap_sq
        )


def alternative_oracle(
    model: MomentModel, theta0, theta1, ustar: float
) -> AlternativeOracle:
    """Compute the population quantities for a single-change alternative.

    ``theta1 == theta0`` is allowed and gives a zero drift with
    ``theta_star == theta0``; config-level validation is stricter.
    """
    if not 0.0 < ustar < 1.0:
        raise ValueError(f"ustar must lie in (0, 1), got {ustar!r}")
    theta0 = model.require(theta0)
    theta1 = model.require(theta1)
    mean0 = np.asarray(model.mean(theta0), dtype=float)
    mean1 = np.asarray(model.mean(theta1), dtype=float)
    mixed = ustar * mean0 + (1.0 - ustar) * mean1
    if model.inverse_mean is not None:
        theta_star = model.require(model.inverse_mean(mixed))
    else:
        init = model.init_guess(mixed) if model.init_guess else theta0
        theta_star = newton_solve(mixed, model, init).theta

    sigma_star = ustar * np.asarray(model.cov(theta0), dtype=float) + (
        1.0 - ustar
    ) * np.asarray(model.cov(theta1), dtype=float)
    eigs = np.linalg.eigvalsh(sigma_star)
    if eigs[0] <= 0.0 or eigs[0] <= 1e-12 * eigs[-1]:
        raise SingularCovariance(
            "mixture covariance of the alternative is singular"
        )
    return AlternativeOracle(
        model_name=model.name,
        ustar=float(ustar),
        theta_star=theta_star,
        sigma_star=sigma_star,
        lambda_star=1.0 / float(eigs[-1]),
        mean_gap=mean0 - mean1,
    )


@dataclass(frozen=True)
class ConsistencyRow:
    n: int
    bound: float
    frac_above_half_bound: float
    median_abs_error: float


@dataclass(frozen=True)
class ConsistencyDiagnostics:
    oracle: AlternativeOracle
    rows: tuple[ConsistencyRow, ...]


def consistency_diagnostics(
    config: ExperimentConfig,
    n_values: Sequence[int] = (100, 500, 2000),
    jobs: int = 1,
    table=None,
) -> ConsistencyDiagnostics:
    """Check the statistic's growth and the location error across n.

    For each sample size, reports the fraction of replications whose
    statistic exceeds half the theoretical detection bound and the median
    absolute location error. Requires a change experiment.
    """
    if not config.has_change:
        raise ValueError(
            "consistency diagnostics need a change experiment; set "
            "'theta1' and 'ustar' in the config"
        )
    model = validate_config(config)
    oracle = alternative_oracle(model, config.theta0, config.theta1, config.ustar)
    rows = []
    for n in n_values:
        result = run_experiment(
            replace(config, n=int(n), record_replications=True),
            jobs=jobs,
            table=table,
        )
        ok = ~np.isnan(result.u_hats)
        bound = oracle.detection_bound(int(n))
        frac = float(np.mean(result.t_stats[ok] >= 0.5 * bound))
        median_err = float(np.median(np.abs(result.u_hats[ok] - config.ustar)))
        rows.append(
            ConsistencyRow(
                n=int(n),
                bound=bound,
                frac_above_half_bound=frac,
                median_abs_error=median_err,
            )
        )
    return ConsistencyDiagnostics(oracle=oracle, rows=tuple(rows))


def sup_zn_gap(
    model: MomentModel,
    theta0,
    theta1=None,
    ustar: float = 0.5,
    n: int = 500,
    reps: int = 100,
    seed: int = 0,
) -> float:
    """Mean over replications of ``sup_k |Z_n(k/n, theta_hat) - drift(k/n)|``.

    With ``theta1`` absent or equal to ``theta0`` the drift is zero and this
    measures the raw supremum of the partial-sum process, which shrinks at
    the usual root-n rate under a stable model.
    """
    if theta1 is None:
        theta1 = theta0
    oracle = alternative_oracle(model, theta0, theta1, ustar)
    grid = np.arange(n + 1) / n
    drift = oracle.drift(grid)
    children = np.random.SeedSequence([seed, n]).spawn(reps)
    gaps = []
    change = tuple(np.asarray(theta1, float)) != tuple(np.asarray(theta0, float))
    for child in children:
        rng = np.random.default_rng(child)
        data = _simulate_sample(
            model, theta0, theta1 if change else None, ustar, n, rng
        )
        try:
            estimate = mme(data, model)
        except EstimationError:
            continue
        state = build_state(data, model)
        mean_hat = np.asarray(model.mean(estimate.theta), dtype=float)
        z = (state.prefix - np.outer(np.arange(n + 1), mean_hat)) / n
        gaps.append(float(np.linalg.norm(z - drift, axis=1).max()))
    if not gaps:
        raise EstimationError("all replications failed")
    return math.fsum(gaps) / len(gaps)


def sup_zn_convergence_check(
    config: ExperimentConfig, n_values: Sequence[int] = (100, 500, 2000)
) -> dict[int, float]:
    """Mean sup-gap between the observed process and its drift, per n.

    Uses ``config.m`` replications at each sample size. Values shrink toward
    zero as n grows when the model and the alternative are specified
    correctly. Requires a change experiment; see :func:`sup_zn_gap` for the
    no-change variant.
    """
    if not config.has_change:
        raise ValueError(
            "convergence check needs a change experiment; set 'theta1' and "
            "'ustar' in the config (use sup_zn_gap directly for a stable "
            "model)"
        )
    model = validate_config(config)
    return {
        int(n): sup_zn_gap(
            model,
            config.theta0,
            config.theta1,
            config.ustar,
            n=int(n),
            reps=config.m,
            seed=config.seed,
        )
        for n in n_values
    }


_CONFIG_KEYS = {
    "model",
    "theta0",
    "theta1",
    "ustar",
    "n",
    "m",
    "level",
    "seed",
    "histogram_bins",
}
_REQUIRED_KEYS = {"model", "theta0", "n", "m"}


def load_config(path) -> list[ExperimentConfig]:
    """Read experiment configs from a JSON file.

    The document is an object with keys ``model``, ``theta0``, ``theta1``,
    ``ustar``, ``n``, ``m``, ``level``, ``seed`` (plus optional
    ``histogram_bins``). ``n`` and ``ustar`` may be lists, in which case one
    config per (ustar, n) pair is returned, ustar varying slowest.
    """
    with open(path) as handle:
        try:
            raw = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ValueError(
            f"{path}: unrecognized config key(s): {', '.join(sorted(unknown))}"
        )
    missing = _REQUIRED_KEYS - set(raw)
    if missing:
        raise ValueError(
            f"{path}: missing config key(s): {', '.join(sorted(missing))}"
        )

    n_list = raw["n"] if isinstance(raw["n"], list) else [raw["n"]]
    ustar_raw = raw.get("ustar")
    ustar_list = ustar_raw if isinstance(ustar_raw, list) else [ustar_raw]

    configs = []
    for ustar, n in itertools.product(ustar_list, n_list):
        kwargs = dict(
            model=raw["model"],
            theta0=tuple(raw["theta0"]),
            n=n,
            m=raw["m"],
            ustar=ustar,
        )
        if raw.get("theta1") is not None:
            kwargs["theta1"] = tuple(raw["theta1"])
        for key in ("level", "seed", "histogram_bins"):
            if key in raw:
                kwargs[key] = raw[key]
        config = ExperimentConfig(**kwargs)
        validate_config(config)
        configs.append(config)
    return configs
