"""Generalization versus interpretability along the (lambda, tau) grid.

The target is a sinusoid, the cognitive model a straight line. Raising tau
pulls the fit towards "line plus a constant", which lowers the
interpretability variance and raises the generalization error. The Pareto
front of the sweep is the menu of attainable compromises.

Run:  python3 demos/tradeoff_sweep.py [output.png]
"""

# %%
import sys

import numpy as np

from interpreg import FitConfig, KernelSpec, quadrature_nodes, sample_dataset, task_from_config
from interpreg.cli import pareto_front
from interpreg.solver import PopulationProblem, decompose_fit

task = task_from_config({
    "f_rho": {"kind": "sinusoid", "amplitude": 1.0, "frequency": 1.0},
    "prior": {"kind": "polynomial", "coeffs": [0.0, 1.5]},
    "noise_sigma": 0.1,
    "input": {"kind": "uniform", "low": [0], "high": [1]},
})
kernel = KernelSpec.gaussian(0.3)
nodes = quadrature_nodes(task.input_dist, 200)
data = sample_dataset(task, 80, seed=0)

# %% sweep
lambdas = [1e-4, 1e-3, 1e-2]
taus = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
rows = []
for tau in taus:
    pop = PopulationProblem(task, kernel, nodes, tau)
    for lam in lambdas:
        fit, rep, _ = decompose_fit(data, task, kernel, FitConfig(lam, tau), nodes, pop)
        rows.append({
            "lambda": lam, "tau": tau,
            "generalization_error": rep.generalization_error,
            "interp_variance": rep.interp_variance,
            "sample_error": rep.sample,
        })

print(f"{'lambda':>8} {'tau':>5} {'gen. error':>11} {'interp var':>11} {'sample':>9}")
for r in rows:
    print(f"{r['lambda']:8.0e} {r['tau']:5.2f} {r['generalization_error']:11.5f} "
          f"{r['interp_variance']:11.5f} {r['sample_error']:9.5f}")

# %% Pareto front
front = pareto_front(rows)
print(f"\n{len(front)} of {len(rows)} settings are Pareto optimal:")
for r in sorted(front, key=lambda r: r["generalization_error"]):
    print(f"  lambda={r['lambda']:.0e} tau={r['tau']:<5} "
          f"gen={r['generalization_error']:.5f} interp={r['interp_variance']:.5f}")

# %% plot
if len(sys.argv) > 1:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5, 4))
    for lam in lambdas:
        sel = [r for r in rows if r["lambda"] == lam]
        ax.plot([r["generalization_error"] for r in sel], [r["interp_variance"] for r in sel], "o-",
                label=f"lambda={lam:.0e}")
    pts = np.array([[r["generalization_error"], r["interp_variance"]] for r in front])
    ax.plot(pts[:, 0], pts[:, 1], "kx", ms=10, label="Pareto")
    ax.set_xlabel("generalization error")
    ax.set_ylabel("interpretability variance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(sys.argv[1], dpi=120)
    print(f"\nwrote {sys.argv[1]}")
