"""Accuracy across a range of perturbation sizes.

Each attack sweeps a grid of l-infinity radii; success verdicts carry over
from smaller radii (any candidate found there stays feasible), so curves are
exactly non-increasing. For the linear model the 50% crossing should sit near
the median closed-form boundary distance.
"""

import numpy as np

import bbattack as bb
from bbattack.estimators import EstimatorConfig
from bbattack.harness import linf_boundary_distance

model = bb.make_builtin("linear2d", 0)
ds = bb.make_dataset("gauss2d", 100, 0)

dists = [linf_boundary_distance(model, ds.points[i], int(ds.labels[i]))
         for i in range(ds.n)]
print(f"boundary distances: median={np.median(dists):.3f}, "
      f"mean={np.mean(dists):.3f}, max={np.max(dists):.3f}\n")

grid = [0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4]
cfg = bb.AttackConfig(epsilon=0.0, estimator=EstimatorConfig(batch=128), max_iters=100)
rows, _ = bb.epsilon_sweep(model, ds, ["spsa", "nes", "zoo"], grid, cfg, 0)

print(f"{'epsilon':>8s} {'SPSA':>6s} {'NES':>6s} {'ZOO':>6s}")
for eps in grid:
    cells = [next(r["accuracy"] for r in rows
                  if r["attack"] == kind and r["epsilon"] == eps)
             for kind in ("spsa", "nes", "zoo")]
    print(f"{eps:>8.2f} {cells[0]:>6.0%} {cells[1]:>6.0%} {cells[2]:>6.0%}")

print("\ncurve for SPSA:")
for eps in grid:
    acc = next(r["accuracy"] for r in rows if r["attack"] == "spsa" and r["epsilon"] == eps)
    print(f"  eps={eps:<5.2f} {'#' * int(40 * acc)}{' ' if acc else ''}{acc:.0%}")
