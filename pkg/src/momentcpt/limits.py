"""Limit law of the test statistic and Monte Carlo critical values.

Under a stable model the statistic converges to the supremum of the squared
Euclidean norm of a d-dimensional Brownian bridge. Quantiles of that law have
no closed form for d > 1, so they are tabulated by simulating the bridge on a
fine grid. A precomputed table for d in 1..5 at the 10%, 5% and 1% levels
ships with the package; any other combination can be simulated on demand.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np

__all__ = [
    "CriticalValueTable",
    "TableRow",
    "simulate_bridge_sup",
    "critical_value",
    "lookup_critical_value",
    "read_table_file",
    "write_table_file",
    "default_table",
    "DEFAULT_SEED",
    "DEFAULT_REPLICATIONS",
    "DEFAULT_GRID",
]

DEFAULT_SEED = 100003
DEFAULT_REPLICATIONS = 100_000
DEFAULT_GRID = 10_000

# The kernel is memory-bandwidth-bound; float32 keeps it fast and the
# rounding effect on a sup draw (~1e-5 relative) is far below Monte Carlo
# noise. Aggregation happens in float64.
_SUP_DTYPE = np.float32
_ROW_BATCH = 256
# Replications per seed chunk. Fixed so that results are identical for any
# `jobs` value: chunk k always uses the k-th spawned child seed.
_CHUNK = 1000


def _sup_draws(dim: int, grid: int, rng: np.random.Generator, count: int) -> np.ndarray:
    """`count` draws of sup_k ||bridge(k/grid)||^2 for one Brownian bridge."""
    out = np.empty(count)
    frac = np.arange(1, grid + 1, dtype=_SUP_DTYPE)
    frac /= _SUP_DTYPE(grid)
    done = 0
    while done < count:
        rows = min(_ROW_BATCH, count - done)
        walk = rng.standard_normal((rows, grid, dim), dtype=_SUP_DTYPE)
        np.cumsum(walk, axis=1, out=walk)
        endpoint = walk[:, -1, :].copy()
        walk -= frac[None, :, None] * endpoint[:, None, :]
        sq = np.einsum("rgd,rgd->rg", walk, walk)
        out[done : done + rows] = sq.max(axis=1)
        done += rows
    # Increments carried unit variance; dividing by `grid` rescales to the
    # unit-time bridge.
    out /= grid
    return out


def simulate_bridge_sup(dim: int, grid: int, rng: np.random.Generator, size=None):
    """Simulate sup ||B(u) - u B(1)||^2 over the grid {0, 1/grid, ..., 1}.

    Returns a float when ``size`` is None, else an array of ``size`` draws.
    ``grid == 1`` gives 0 exactly: the path is pinned at both ends.
    """
    if dim < 1:
        raise ValueError("dim must be a positive integer")
    if grid < 1:
        raise ValueError("grid must be a positive integer")
    if size is None:
        return float(_sup_draws(dim, grid, rng, 1)[0])
    return _sup_draws(dim, grid, rng, int(size))


def _chunk_worker(task) -> np.ndarray:
    dim, grid, seed_seq, count = task
    return _sup_draws(dim, grid, np.random.default_rng(seed_seq), count)


@dataclass(frozen=True)
class CriticalValueTable:
    """Simulated quantiles of the bridge-supremum law for one dimension.

    ``quantiles[level]`` is the (1 - level)-quantile; ``standard_errors``
    holds a quantile standard error from the binomial order-statistic
    bracket at one standard deviation.
    """

    dim: int
    grid_points: int
    replications: int
    seed: int
    quantiles: dict[float, float]
    standard_errors: dict[float, float]


def critical_value(
    dim: int,
    level=0.05,
    replications: int = DEFAULT_REPLICATIONS,
    grid: int = DEFAULT_GRID,
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
) -> CriticalValueTable:
    """Monte Carlo critical values for the bridge-supremum law.

    Parameters
    ----------
    dim : int
        Dimension of the bridge (equals the model dimension).
    level : float or iterable of float
        One or more levels in (0, 1); all levels reuse the same draws.
    replications, grid : int
        Number of bridge draws and grid points per path.
    seed : int
        Seed for the replication streams. The same seed gives identical
        results for any ``jobs``.
    jobs : int
        Worker processes; 1 runs in-process.
    """
    if dim < 1 or grid < 1:
        raise ValueError("dim and grid must be positive integers")
    if replications < 2:
        raise ValueError("need at least 2 replications")
    if isinstance(level, (int, float)):
        levels = (float(level),)
    else:
        levels = tuple(float(l) for l in level)
    if not levels or any(not 0.0 < l < 1.0 for l in levels):
        raise ValueError("levels must lie strictly inside (0, 1)")

    n_chunks = math.ceil(replications / _CHUNK)
    sizes = [_CHUNK] * (n_chunks - 1) + [replications - _CHUNK * (n_chunks - 1)]
    seeds = np.random.SeedSequence(seed).spawn(n_chunks)
    tasks = [(dim, grid, s, c) for s, c in zip(seeds, sizes)]

    jobs = max(1, int(jobs))
    if jobs == 1 or n_chunks == 1:
        parts = [_chunk_worker(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, n_chunks)) as pool:
            parts = list(pool.map(_chunk_worker, tasks))
    draws = np.sort(np.concatenate(parts))

    quantiles: dict[float, float] = {}
    errors: dict[float, float] = {}
    for lvl in levels:
        p = 1.0 - lvl
        quantiles[lvl] = float(np.quantile(draws, p))
        half = math.sqrt(p * (1.0 - p) / replications)
        lo = float(np.quantile(draws, max(p - half, 0.0)))
        hi = float(np.quantile(draws, min(p + half, 1.0)))
        errors[lvl] = (hi - lo) / 2.0
    return CriticalValueTable(
        dim=dim,
        grid_points=grid,
        replications=replications,
        seed=seed,
        quantiles=quantiles,
        standard_errors=errors,
    )


class TableRow(NamedTuple):
    value: float
    stderr: float
    replications: int
    grid_points: int
    seed: int


def _key(dim: int, level: float) -> tuple[int, float]:
    return int(dim), round(float(level), 10)


def rows_from_table(table: CriticalValueTable) -> dict[tuple[int, float], TableRow]:
    """Flatten a simulated table into file rows keyed by (dim, level)."""
    return {
        _key(table.dim, lvl): TableRow(
            value=val,
            stderr=table.standard_errors[lvl],
            replications=table.replications,
            grid_points=table.grid_points,
            seed=table.seed,
        )
        for lvl, val in table.quantiles.items()
    }


def read_table_file(path) -> dict[tuple[int, float], TableRow]:
    """Parse a critical-value table file.

    Rows are whitespace-separated ``dim level value stderr replications grid
    seed``; blank lines and ``#`` comments are ignored.
    """
    rows: dict[tuple[int, float], TableRow] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 7:
            raise ValueError(
                f"{path}: line {lineno}: expected 7 fields, got {len(fields)}"
            )
        dim, level = int(fields[0]), float(fields[1])
        rows[_key(dim, level)] = TableRow(
            value=float(fields[2]),
            stderr=float(fields[3]),
            replications=int(fields[4]),
            grid_points=int(fields[5]),
            seed=int(fields[6]),
        )
    return rows


def write_table_file(path, rows: Mapping[tuple[int, float], TableRow]) -> None:
    """Write rows sorted by dimension then level, with a header comment."""
    lines = ["# dim level value stderr replications grid seed"]
    for (dim, level), row in sorted(rows.items()):
        lines.append(
            f"{dim} {level:g} {row.value!r} {row.stderr!r} "
            f"{row.replications} {row.grid_points} {row.seed}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


@lru_cache(maxsize=1)
def default_table() -> dict[tuple[int, float], TableRow]:
    """Rows of the table shipped with the package (treat as read-only)."""
    ref = resources.files("momentcpt").joinpath("_data/critical_values.txt")
    with resources.as_file(ref) as path:
        return read_table_file(path)


def lookup_critical_value(dim: int, level: float, table=None) -> float:
    """Resolve a critical value for (dim, level).

    ``table`` may be None (packaged default), a path to a table file, a
    mapping of rows as returned by :func:`read_table_file`, or a
    :class:`CriticalValueTable`.
    """
    if isinstance(table, CriticalValueTable):
        rows = rows_from_table(table)
    elif table is None:
        rows = default_table()
    elif isinstance(table, (str, Path)):
        rows = read_table_file(table)
    else:
        rows = table
    try:
        row = rows[_key(dim, level)]
    except KeyError:
        raise KeyError(
            f"no tabulated critical value for dim={dim}, level={level}; "
            f"simulate one with 'momentcpt critval --dim {dim} --level "
            f"{level}' or pass critical_value explicitly"
        ) from None
    value = row.value if isinstance(row, TableRow) else row
    return float(value)
