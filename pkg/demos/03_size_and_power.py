"""Empirical size and power of the test, in miniature.

Size: reject rate on homogeneous Gamma samples, which should sit at or below
the nominal level. Power: reject rate when the rate parameter actually
changes, which should climb to one as n grows and fall off as the change
moves toward the end of the sample.
"""

from momentcpt import ExperimentConfig, run_experiment

M = 400  # replications per cell; raise for smoother numbers

print("empirical size, Gamma(1, 1), level 0.05:")
for n in (50, 100, 500):
    config = ExperimentConfig(model="gamma", theta0=(1.0, 1.0), n=n, m=M, seed=31)
    result = run_experiment(config)
    print(f"  n={n:4d}: {result.rejection_rate:.3f}")

print("\nempirical power, Gamma(1, 0.01) -> Gamma(1, 0.05):")
for ustar in (0.50, 0.75, 0.90):
    line = f"  u*={ustar:.2f}:"
    for n in (50, 100, 500):
        config = ExperimentConfig(
            model="gamma",
            theta0=(1.0, 0.01),
            theta1=(1.0, 0.05),
            ustar=ustar,
            n=n,
            m=M,
            seed=32,
        )
        result = run_experiment(config)
        line += f"  n={n}: {result.rejection_rate:.3f}"
    print(line)

print("\nlate changes (u* = 0.90) leave few post-change observations, so")
print("small samples rarely reject; by n=500 the test catches them anyway")
