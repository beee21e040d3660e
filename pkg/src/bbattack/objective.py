"""Logit-margin objective and the l-infinity constraint set.

The adversary minimizes ``margin = z_y - max_{j != y} z_j``; the margin is
positive exactly when the true class wins strictly, and an attack run stops
early once it drops below a configured threshold (default -5.0). Feasibility
is the l-infinity ball of radius epsilon around the clean point, intersected
with the valid input box.
"""

from dataclasses import dataclass

import numpy as np

from .models import InputVector

STOP_THRESHOLD_DEFAULT = -5.0


def _check_logits(logits):
    z = np.asarray(logits, dtype=float)
    if z.ndim != 1:
        raise ValueError(f"expected a flat logits vector, got shape {z.shape}")
    if z.shape[0] < 2:
        raise ValueError("margin needs at least 2 classes")
    return z


def margin(logits, y: int) -> float:
    """True-class logit minus the largest rival logit."""
    z = _check_logits(logits)
    y = int(y)
    if not 0 <= y < z.shape[0]:
        raise ValueError(f"label {y} out of range for {z.shape[0]} classes")
    rivals = np.delete(z, y)
    return float(z[y] - rivals.max())


def margin_many(logits, y: int) -> np.ndarray:
    """Row-wise margin for a (n, C) logits matrix."""
    z = np.asarray(logits, dtype=float)
    if z.ndim != 2 or z.shape[1] < 2:
        raise ValueError(f"expected (n, C) logits with C >= 2, got shape {z.shape}")
    y = int(y)
    masked = z.copy()
    masked[:, y] = -np.inf
    return z[:, y] - masked.max(axis=1)


def runner_up(logits, y: int) -> int:
    """Index of the largest non-y logit; ties break toward the smaller index."""
    z = _check_logits(logits)
    masked = z.copy()
    masked[int(y)] = -np.inf
    return int(np.argmax(masked))


def is_misclassified(logits, y: int) -> bool:
    """True iff argmax(logits) != y; an argmax tie on y counts as correct."""
    z = _check_logits(logits)
    return int(np.argmax(z)) != int(y)


@dataclass(frozen=True)
class ConstraintSet:
    """l-infinity ball of radius epsilon around ``center``, clipped to the box."""

    center: np.ndarray
    epsilon: float
    box_lo: float = 0.0
    box_hi: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.ndim != 1:
            raise ValueError(f"center must be a flat vector, got shape {c.shape}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if not self.box_lo < self.box_hi:
            raise ValueError(f"invalid box [{self.box_lo}, {self.box_hi}]")
        if c.min() < self.box_lo or c.max() > self.box_hi:
            raise ValueError("center lies outside the box, feasible set may be empty")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @classmethod
    def around(cls, point: InputVector, epsilon: float) -> "ConstraintSet":
        return cls(point.values, epsilon, point.box_lo, point.box_hi)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, x) -> np.ndarray:
        """Euclidean projection onto ball-intersect-box (coordinate-wise clamp)."""
        x = np.asarray(x, dtype=float)
        if x.shape != self.center.shape:
            raise ValueError(f"shape {x.shape} does not match center {self.center.shape}")
        out = np.clip(x, self.center - self.epsilon, self.center + self.epsilon)
        return np.clip(out, self.box_lo, self.box_hi)

    def random_init(self, rng) -> np.ndarray:
        """center + coordinate-wise Uniform[-eps, +eps], projected feasible."""
        u = rng.uniform(-self.epsilon, self.epsilon, size=self.dim)
        return self.project(self.center + u)

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            np.all(np.abs(x - self.center) <= self.epsilon + tol)
            and x.min() >= self.box_lo - tol
            and x.max() <= self.box_hi + tol
        )
