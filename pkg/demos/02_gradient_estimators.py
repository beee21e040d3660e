"""The three gradient-free estimators against the analytic gradient.

SPSA probes random +-1 directions, NES probes Gaussian directions, ZOO probes
coordinates; all pay 2 queries per sample. On a smooth tanh network their
estimates should align with the true margin gradient, and more samples buy a
better angle.
"""

import numpy as np

import bbattack as bb
from bbattack.estimators import EstimatorConfig, estimate

model = bb.make_builtin("mlp_tanh", 42)
rng_pts = np.random.default_rng(123)
points = rng_pts.uniform(0, 1, size=(50, model.input_dim))

print(f"model: mlp_tanh seed 42, D={model.input_dim}")
print(f"{'estimator':>10s} {'batch':>6s} {'queries':>8s} {'median cos':>11s} {'min cos':>8s}")

for kind in ("spsa", "nes", "zoo"):
    batches = [model.input_dim] if kind == "zoo" else [16, 64, 256]
    for batch in batches:
        cosines = []
        queries = None
        for i, x in enumerate(points):
            y = int(np.argmax(bb.forward(model, x)))
            g_true = bb.margin_input_gradient(model, x, y)
            f = lambda X: bb.margin_many(bb.forward(model, X), y)
            cfg = EstimatorConfig(kind=kind, delta=1e-3, sigma=1e-3, h=1e-3, batch=batch)
            est = estimate(f, x, cfg, np.random.default_rng(i))
            queries = est.queries_used
            u = est.g / np.linalg.norm(est.g)
            v = g_true / np.linalg.norm(g_true)
            cosines.append(float(u @ v))
        print(f"{kind:>10s} {batch:>6d} {queries:>8d} "
              f"{np.median(cosines):>11.4f} {min(cosines):>8.4f}")

print("\nexact cases:")
a = np.array([1.0, 2.0])
f_lin = lambda X: np.asarray(X) @ a
enum = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
spsa = bb.estimate_spsa(f_lin, np.zeros(2), EstimatorConfig(batch=4), np.random.default_rng(0),
                        directions=enum)
zoo = bb.estimate_zoo(f_lin, np.zeros(2), EstimatorConfig(kind="zoo", batch=2),
                      np.random.default_rng(0))
print(f"  SPSA over all four sign vectors on f=x1+2*x2 -> {spsa.g}")
print(f"  ZOO with batch=D on the same map            -> {zoo.g}")
