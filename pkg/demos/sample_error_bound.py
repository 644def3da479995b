"""How many samples does the covering-number bound need?

The confidence bound is vacuous for small m and becomes informative only
once m is large relative to the covering number and M^2 / epsilon. A Monte
Carlo run with a one-dimensional hypothesis class shows the bound is
respected, and by a wide margin.

Run:  python3 demos/sample_error_bound.py
"""

# %%
from interpreg import BoundInputs, FitConfig, KernelSpec, invert_bound_for_epsilon, sample_error_confidence
from interpreg.bounds import monte_carlo_validate_bound
from interpreg.core import InputMeasure, PriorModel, SyntheticTask
from interpreg.functions import Polynomial

# %% confidence as a function of m
print(f"{'m':>8} {'raw':>12} {'vacuous':>8}")
for m in (100, 1000, 3000, 10000, 100000):
    res = sample_error_confidence(BoundInputs(m, epsilon=1.0, big_m=1.0, m_p=0.2, covering_dim=1, radius_R=1.0))
    print(f"{m:8d} {res.raw:12.4f} {str(res.vacuous):>8}")

# %% smallest epsilon certified at 95% confidence
for m in (1000, 10000, 100000):
    eps = invert_bound_for_epsilon(m, 0.05, 1.0, 0.2, 1, 1.0)
    print(f"m={m:6d}: epsilon at delta=0.05 is {eps:.4f}")

# %% Monte Carlo with a linear kernel (covering dimension 1)
task = SyntheticTask(Polynomial((0.0, 1.0)), PriorModel(Polynomial((0.2, 0.8))), 0.1,
                     InputMeasure.uniform([0.0], [1.0]))
res = monte_carlo_validate_bound(task, KernelSpec.linear(), FitConfig(1e-3), m=500, epsilon=1.0, trials=200, seed=0)
b = res.bound.inputs
print(f"\nmeasured M={b.big_m:.3f} Mp={b.m_p:.3f} R={b.radius_R:.3f} d={b.covering_dim}")
print(f"bound: failure probability <= {1 - res.bound.clamped:.4f} (raw confidence {res.bound.raw:.4f})")
print(f"observed: {res.violations}/{res.trials} violations; largest deviation {res.deviations.max():.2e}")
print(f"consistent: {res.consistent}")
