"""Does the black-box attack find the same minima as white-box PGD?

Per point, both attacks minimize the same margin inside the same ball; the
scatter pairs their best margins. On the linear model both provably land on
the ball-corner optimum; on the smooth tanh model they still agree closely,
which is the evidence that PGD perturbations are near worst-case.
"""

import numpy as np

import bbattack as bb
from bbattack.estimators import EstimatorConfig
from bbattack.harness import NO_STOP

for label, model, ds, eps, iters in (
    ("linear2d + gauss2d", bb.make_builtin("linear2d", 0),
     bb.make_dataset("gauss2d", 50, 0), None, 300),
    ("mlp_small + teacher band", bb.make_builtin("mlp_small", 7),
     bb.make_dataset("mlp_teacher", 50, 7), 0.25, 100),
):
    if eps is None:
        eps = 2.0 * bb.mean_linf_boundary_distance(model, ds)
    spsa_cfg = bb.AttackConfig(epsilon=eps, estimator=EstimatorConfig(batch=256),
                               max_iters=iters, stop_threshold=NO_STOP)
    pgd_cfg = bb.PgdConfig(epsilon=eps, step_size=eps / 10, iters=40)
    pairs, stats, _, _ = bb.margin_scatter(model, ds, spsa_cfg, pgd_cfg, 0)
    print(f"{label}  (epsilon={eps:.3f}, N={ds.n})")
    print(f"  mean |spsa - pgd| best margin: {stats['mean_abs_diff']:.2e}")
    print(f"  max  |spsa - pgd| best margin: {stats['max_abs_diff']:.2e}")
    print(f"  fraction within 0.5:           {stats['frac_within_half']:.0%}")
    worst = int(np.argmax(np.abs(pairs[:, 0] - pairs[:, 1])))
    print(f"  most-disagreeing point {worst}: "
          f"spsa={pairs[worst, 0]:+.4f} pgd={pairs[worst, 1]:+.4f}\n")
