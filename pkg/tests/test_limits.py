"""Bridge-supremum simulation, quantiles, and the critical value table."""

from __future__ import annotations

import math

import numpy as np
import pytest

from momentcpt import (
    critical_value,
    default_table,
    lookup_critical_value,
    read_table_file,
    simulate_bridge_sup,
    write_table_file,
)
from momentcpt.limits import rows_from_table

# Closed forms for the one-dimensional law: the supremum of |bridge| has the
# Kolmogorov distribution, so the squared supremum has mean pi^2 / 12 and
# quantiles equal to the squared Kolmogorov points.
SUP_SQ_MEAN_1D = math.pi**2 / 12.0
SUP_SQ_Q_1D = {0.10: 1.2238**2, 0.05: 1.3581**2, 0.01: 1.6276**2}
SUP_SQ_Q95_1D = SUP_SQ_Q_1D[0.05]
# d=2 continuum 95% point: squared two-dimensional sup-norm quantile
# 1.5838^2 = 2.508, cross-checked here by two unrelated simulators.
SUP_SQ_Q95_2D = 2.508


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_single_grid_point_pins_the_bridge(dim):
    rng = np.random.default_rng(1)
    assert simulate_bridge_sup(dim, 1, rng) == 0.0


def test_draws_are_nonnegative_float64():
    rng = np.random.default_rng(2)
    draws = simulate_bridge_sup(2, 50, rng, size=500)
    assert draws.dtype == np.float64
    assert draws.shape == (500,)
    assert np.all(draws >= 0.0)
    assert float(np.max(draws)) > 0.0


def test_scalar_and_batch_apis():
    value = simulate_bridge_sup(1, 10, np.random.default_rng(3))
    assert isinstance(value, float)
    with pytest.raises(ValueError):
        simulate_bridge_sup(0, 10, np.random.default_rng(3))
    with pytest.raises(ValueError):
        simulate_bridge_sup(1, 0, np.random.default_rng(3))


def test_one_dimensional_mean_matches_closed_form():
    # 1e5 draws on the default grid; tolerance 2% absorbs the downward
    # discretization bias of a maximum over a finite grid.
    rng = np.random.default_rng(314159)
    draws = simulate_bridge_sup(1, 10_000, rng, size=100_000)
    assert abs(draws.mean() - SUP_SQ_MEAN_1D) <= 0.02 * SUP_SQ_MEAN_1D


def test_quantiles_increase_as_level_decreases():
    table = critical_value(1, [0.5, 0.1, 0.05, 0.01], replications=4000, grid=500, seed=9)
    values = [table.quantiles[l] for l in (0.5, 0.1, 0.05, 0.01)]
    assert values == sorted(values)
    assert all(se > 0.0 for se in table.standard_errors.values())


def test_same_seed_reproduces_and_seeds_matter():
    a = critical_value(2, 0.05, replications=3000, grid=300, seed=42)
    b = critical_value(2, 0.05, replications=3000, grid=300, seed=42)
    c = critical_value(2, 0.05, replications=3000, grid=300, seed=43)
    assert a.quantiles == b.quantiles
    assert a.quantiles != c.quantiles


def test_results_do_not_depend_on_worker_count():
    serial = critical_value(1, 0.1, replications=2500, grid=200, seed=7, jobs=1)
    parallel = critical_value(1, 0.1, replications=2500, grid=200, seed=7, jobs=2)
    assert serial.quantiles == parallel.quantiles
    assert serial.standard_errors == parallel.standard_errors


def test_grid_refinement_is_within_monte_carlo_noise():
    coarse = critical_value(1, 0.05, replications=15_000, grid=10_000, seed=17)
    fine = critical_value(1, 0.05, replications=15_000, grid=20_000, seed=18)
    gap = abs(coarse.quantiles[0.05] - fine.quantiles[0.05])
    combined = math.hypot(
        coarse.standard_errors[0.05], fine.standard_errors[0.05]
    )
    assert gap <= 3.0 * combined


def test_invalid_arguments_raise():
    with pytest.raises(ValueError):
        critical_value(0, 0.05, replications=100, grid=10)
    with pytest.raises(ValueError):
        critical_value(1, 1.5, replications=100, grid=10)
    with pytest.raises(ValueError):
        critical_value(1, 0.05, replications=1, grid=10)


def test_table_file_round_trip(tmp_path):
    table = critical_value(2, [0.1, 0.05], replications=2000, grid=100, seed=3)
    rows = rows_from_table(table)
    path = tmp_path / "cv.txt"
    write_table_file(path, rows)
    again = read_table_file(path)
    assert again == rows
    # comments and blank lines are ignored
    text = path.read_text()
    path.write_text("# a comment\n\n" + text)
    assert read_table_file(path) == rows


def test_table_file_rejects_malformed_rows(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 0.05 2.4\n")
    with pytest.raises(ValueError, match="expected 7 fields"):
        read_table_file(path)


def test_packaged_table_covers_advertised_grid():
    rows = default_table()
    for dim in range(1, 6):
        for level in (0.1, 0.05, 0.01):
            assert (dim, level) in rows
    # nested laws: adding coordinates can only push the supremum up
    for level in (0.1, 0.05, 0.01):
        values = [rows[(dim, level)].value for dim in range(1, 6)]
        assert values == sorted(values)


def test_packaged_values_match_known_quantiles():
    # A gridded maximum underestimates the true supremum, so shipped values
    # must sit slightly below the continuum quantiles, never above.
    rows = default_table()
    for level, ref in SUP_SQ_Q_1D.items():
        d1 = rows[(1, level)]
        assert ref - 0.045 <= d1.value <= ref + 3.0 * d1.stderr
    d2 = rows[(2, 0.05)]
    assert SUP_SQ_Q95_2D - 0.045 <= d2.value <= SUP_SQ_Q95_2D + 3.0 * d2.stderr


def test_lookup_paths_and_missing_key_guidance(tmp_path):
    assert lookup_critical_value(2, 0.05) == default_table()[(2, 0.05)].value
    table = critical_value(3, 0.2, replications=2000, grid=100, seed=5)
    assert lookup_critical_value(3, 0.2, table) == table.quantiles[0.2]
    path = tmp_path / "cv.txt"
    write_table_file(path, rows_from_table(table))
    assert lookup_critical_value(3, 0.2, path) == table.quantiles[0.2]
    with pytest.raises(KeyError, match="critval"):
        lookup_critical_value(4, 0.123)
