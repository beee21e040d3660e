"""Adam updates driving the attacks, plus the projected step.

Two modes. Global mode is textbook Adam with a single step counter. Coordinate
mode (ZOO-ADAM) keeps a per-coordinate counter and touches only the
coordinates the estimator actually probed: their moments and counters advance,
everything else is left bitwise unchanged.

The attacks minimize the margin, so the raw gradient estimate is used with no
sign flip.
"""

import numpy as np

from .estimators import GradientEstimate
from .objective import ConstraintSet


class Adam:
    def __init__(self, dim, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8,
                 coordinate_wise=False):
        self.dim = int(dim)
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.coordinate_wise = bool(coordinate_wise)
        self.m = np.zeros(self.dim)
        self.v = np.zeros(self.dim)
        self.t = np.zeros(self.dim, dtype=int) if coordinate_wise else 0

    def step(self, x, grad, coords=None) -> np.ndarray:
        """One descent step on a copy of x; ``coords`` limits coordinate mode."""
        x = np.asarray(x, dtype=float)
        g = np.asarray(grad, dtype=float)
        if x.shape != (self.dim,) or g.shape != (self.dim,):
            raise ValueError(f"expected vectors of dimension {self.dim}")
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient")
        if self.coordinate_wise:
            idx = np.arange(self.dim) if coords is None else np.asarray(coords, dtype=int)
            self.t[idx] += 1
            self.m[idx] = self.beta1 * self.m[idx] + (1 - self.beta1) * g[idx]
            self.v[idx] = self.beta2 * self.v[idx] + (1 - self.beta2) * g[idx] ** 2
            m_hat = self.m[idx] / (1 - self.beta1 ** self.t[idx])
            v_hat = self.v[idx] / (1 - self.beta2 ** self.t[idx])
            out = x.copy()
            out[idx] = x[idx] - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
            return out
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * g
        self.v = self.beta2 * self.v + (1 - self.beta2) * g ** 2
        m_hat = self.m / (1 - self.beta1 ** self.t)
        v_hat = self.v / (1 - self.beta2 ** self.t)
        return x - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def projected_step(adam: Adam, x, estimate, constraint: ConstraintSet) -> np.ndarray:
    """Adam step followed by projection onto the feasible set.

    Accepts either a :class:`GradientEstimate` (whose estimated-coordinate set
    gates coordinate mode) or a plain gradient vector.
    """
    if isinstance(estimate, GradientEstimate):
        grad, coords = estimate.g, estimate.estimated_coords
    else:
        grad, coords = estimate, None
    return constraint.project(adam.step(x, grad, coords=coords))
