"""Accuracy against each adversary as compute grows, plus the convergence CDF.

Desk-scale version of the attack-comparison protocol: every attack runs with
several batch sizes (the number of finite-difference samples per update) and
the table reports post-attack accuracy. The CDF re-reads the same runs as
"fraction of points misclassified within q queries".
"""

import numpy as np

import bbattack as bb
from bbattack.estimators import EstimatorConfig

model = bb.make_builtin("linear2d", 0)
ds = bb.make_dataset("gauss2d", 100, 0)
eps = 2.0 * bb.mean_linf_boundary_distance(model, ds)
print(f"linear2d + gauss2d, N={ds.n}, epsilon={eps:.4f} "
      f"(2x mean boundary distance), 300 iterations max\n")

cfg = bb.AttackConfig(epsilon=eps, estimator=EstimatorConfig(batch=16),
                      max_iters=300, stop_threshold=-5.0)
batches = [16, 64, 256]
rows, results = bb.accuracy_table(model, ds, ["spsa", "nes", "zoo"], batches, cfg, 0)

print(f"{'batch':>6s} {'SPSA':>7s} {'NES':>7s} {'ZOO':>7s}")
for batch in batches:
    cells = []
    for kind in ("spsa", "nes", "zoo"):
        row = next(r for r in rows if r["attack"] == kind and r["batch"] == batch)
        cells.append(f"{row['accuracy']:>6.0%}")
    print(f"{batch:>6d} {cells[0]:>7s} {cells[1]:>7s} {cells[2]:>7s}")
print("(ZOO's effective batch is capped at the input dimension, here 2)")

print("\nconvergence CDF, SPSA batch 16:")
budgets, fractions = bb.convergence_cdf(results[("spsa", 16)])
for q, frac in zip(budgets, fractions):
    bar = "#" * int(40 * frac)
    print(f"  q<={q:>6d}  {frac:>5.0%} {bar}")

mean_q = np.mean([r.total_queries for r in results[("spsa", 16)]])
print(f"\nmean queries per point at batch 16: {mean_q:.0f}")
