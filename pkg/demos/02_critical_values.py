"""Where the critical values come from.

The null law of the test statistic is the supremum of the squared norm of a
d-dimensional Brownian bridge. Quantiles are simulated: draw a discretized
bridge on a grid, take the max of the squared norm, repeat, take the
empirical quantile. The package ships a precomputed table; this script
rebuilds a small one and shows the two knobs that matter.
"""

import numpy as np

from momentcpt import critical_value, default_table, simulate_bridge_sup

rng = np.random.default_rng(7)

# one draw at a time, if you want the raw ingredient
draws = simulate_bridge_sup(2, grid=2000, rng=rng, size=5)
print("five raw sup draws (d=2):", draws.round(3))

# a quick table: fewer replications than the shipped one, so noisier
table = critical_value(2, level=[0.10, 0.05, 0.01], replications=20_000, grid=2000, seed=7)
print("\nd=2 quantiles at R=2e4, G=2000 (shipped table in parentheses):")
shipped = default_table()
for level in (0.10, 0.05, 0.01):
    row = shipped[(2, level)]
    print(
        f"  level {level:4}: {table.quantiles[level]:.3f} "
        f"+/- {table.standard_errors[level]:.3f}   ({row.value:.3f})"
    )

# the grid matters: a max over a coarse grid misses the true supremum, so
# quantiles climb as the grid refines and settle near the continuum value
print("\n95% point for d=1 as the grid refines (continuum: 1.3581^2 = 1.844):")
for grid in (50, 200, 1000, 5000):
    t = critical_value(1, level=0.05, replications=20_000, grid=grid, seed=7)
    print(f"  G={grid:5d}: {t.quantiles[0.05]:.3f}")

# same seed, same answer: tables are reproducible by construction
again = critical_value(1, level=0.05, replications=20_000, grid=5000, seed=7)
t = critical_value(1, level=0.05, replications=20_000, grid=5000, seed=7)
assert again.quantiles == t.quantiles
print("\nsame (d, level, R, G, seed) reproduces the identical table")
