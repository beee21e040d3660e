"""Anatomy of one gradient-free attack run.

Attacks a single Gaussian-blob point with SPSA and prints the full trace:
cumulative queries, the margin after each projected Adam step, and where the
stop rule fires. The margin starts positive (correctly classified), crosses
zero at the first misclassification, and the run halts once it drops below
the stop threshold.
"""

import numpy as np

import bbattack as bb
from bbattack.estimators import EstimatorConfig

model = bb.make_builtin("linear2d", 0)
ds = bb.make_dataset("gauss2d", 100, 0)
eps = 2.0 * bb.mean_linf_boundary_distance(model, ds)

i = 0
x0, y = ds.point(i), int(ds.labels[i])
cfg = bb.AttackConfig(
    epsilon=eps,
    estimator=EstimatorConfig(kind="spsa", delta=0.01, batch=64),
    lr=0.01,
    max_iters=100,
    stop_threshold=-5.0,
    seed=bb.derive_seed(0, i),
)
print(f"point {i}: x0={np.round(x0.values, 4)} label={y} epsilon={eps:.4f}")
print(f"clean margin: {bb.margin(bb.forward(model, x0.values), y):.4f}\n")

trace = bb.run_gradient_free_attack(model, x0, y, cfg)

print(f"{'iter':>4s} {'queries':>8s} {'margin':>9s}  flag")
for r in trace.records:
    if r.iteration % 5 == 0 or r.misclassified != trace.records[max(0, r.iteration - 1)].misclassified \
            or r is trace.records[-1]:
        flag = "MISCLASSIFIED" if r.misclassified else ""
        print(f"{r.iteration:>4d} {r.cumulative_queries:>8d} {r.margin:>9.4f}  {flag}")

print(f"\nsuccess: {trace.success}")
print(f"queries to first misclassification: {trace.queries_to_success}")
print(f"total queries: {trace.total_queries} "
      f"(= 1 + iterations x (2 x batch + 1))")
print(f"best margin: {trace.best_margin():.4f}, final margin: {trace.final_margin():.4f}")
print(f"final point stays feasible: "
      f"{np.max(np.abs(trace.final_x - x0.values)) <= eps + 1e-12}")
