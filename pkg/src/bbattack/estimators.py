"""Gradient-free gradient estimators: SPSA, NES, and ZOO coordinate differences.

All three are two-sided, so one estimate with batch size B costs exactly 2*B
objective evaluations:

* SPSA draws B Rademacher directions v (independent +-1 coordinates) and
  averages ``[f(x + d*v) - f(x - d*v)] / (2d) * v`` over them.
* NES draws B standard-normal directions u (antithetic pairs) and averages
  ``[f(x + s*u) - f(x - s*u)] / (2s) * u``.
* ZOO picks B distinct coordinates at random and takes a central difference
  ``[f(x + h*e_i) - f(x - h*e_i)] / (2h)`` along each; unchosen coordinates
  are reported as not estimated so the optimizer leaves them alone.

The objective ``f`` maps an (n, D) batch of points to n scalar values; probe
points are queried as-is, without projection onto the feasible set (only the
attack's iterates are projected). Probes are stacked [all +, then all -] and
reduced in sample order, so an estimate is a deterministic function of
(f, x, cfg, seed).
"""

from dataclasses import dataclass

import numpy as np

KINDS = ("spsa", "nes", "zoo")


class GradientEstimationError(RuntimeError):
    """The objective returned a non-finite value; carries the offending point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = None if point is None else np.array(point, dtype=float)


@dataclass
class EstimatorConfig:
    """Which estimator to run and its scale parameters.

    ``batch`` counts two-sided samples, so oracle queries per estimate are
    ``2 * batch``. Defaults: SPSA radius delta=0.01, NES sigma=0.01 (set equal
    to delta by default but independently configurable), ZOO step h=1e-4,
    batch 8192.
    """

    kind: str = "spsa"
    delta: float = 0.01
    sigma: float = 0.01
    h: float = 1e-4
    batch: int = 8192

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}; choose from {KINDS}")
        if self.delta <= 0 or self.sigma <= 0 or self.h <= 0:
            raise ValueError("delta, sigma and h must all be positive")
        if int(self.batch) < 1:
            raise ValueError(f"batch must be >= 1, got {self.batch}")
        self.batch = int(self.batch)


@dataclass
class GradientEstimate:
    """An estimated gradient plus the oracle cost of producing it.

    ``estimated_coords`` is None when every coordinate was estimated (SPSA,
    NES); for ZOO it lists the coordinates actually probed.
    """

    g: np.ndarray
    queries_used: int
    estimated_coords: np.ndarray | None = None


def _probe(f, points, x):
    vals = np.asarray(f(points), dtype=float)
    if vals.shape != (points.shape[0],):
        raise ValueError(
            f"objective returned shape {vals.shape} for {points.shape[0]} probe points"
        )
    if not np.all(np.isfinite(vals)):
        bad = int(np.flatnonzero(~np.isfinite(vals))[0])
        raise GradientEstimationError(
            f"objective returned a non-finite value at probe point {bad}",
            point=points[bad],
        )
    return vals


def _two_sided(f, x, offsets):
    # stacked [x + offsets; x - offsets], reduced by sample index
    points = np.vstack([x + offsets, x - offsets])
    vals = _probe(f, points, x)
    n = offsets.shape[0]
    return vals[:n] - vals[n:]


def estimate_spsa(f, x, cfg: EstimatorConfig, rng, directions=None) -> GradientEstimate:
    """Simultaneous-perturbation estimate averaged over ``cfg.batch`` directions.

    ``directions`` overrides the random +-1 draws with an explicit (k, D)
    sign matrix (used for exhaustive enumeration in tests).
    """
    x = np.asarray(x, dtype=float)
    if directions is None:
        v = rng.integers(0, 2, size=(cfg.batch, x.shape[0])).astype(float) * 2.0 - 1.0
    else:
        v = np.asarray(directions, dtype=float)
        if v.ndim != 2 or v.shape[1] != x.shape[0]:
            raise ValueError(f"directions must be (k, {x.shape[0]}), got {v.shape}")
    diffs = _two_sided(f, x, cfg.delta * v)
    coef = diffs / (2.0 * cfg.delta)
    g = (coef @ v) / v.shape[0]
    return GradientEstimate(g=g, queries_used=2 * v.shape[0])


def estimate_nes(f, x, cfg: EstimatorConfig, rng, samples=None) -> GradientEstimate:
    """Antithetic Gaussian-smoothing estimate averaged over ``cfg.batch`` pairs."""
    x = np.asarray(x, dtype=float)
    if samples is None:
        u = rng.standard_normal(size=(cfg.batch, x.shape[0]))
    else:
        u = np.asarray(samples, dtype=float)
        if u.ndim != 2 or u.shape[1] != x.shape[0]:
            raise ValueError(f"samples must be (k, {x.shape[0]}), got {u.shape}")
    diffs = _two_sided(f, x, cfg.sigma * u)
    coef = diffs / (2.0 * cfg.sigma)
    g = (coef @ u) / u.shape[0]
    return GradientEstimate(g=g, queries_used=2 * u.shape[0])


def estimate_zoo(f, x, cfg: EstimatorConfig, rng, coords=None) -> GradientEstimate:
    """Central differences along ``cfg.batch`` distinct random coordinates."""
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    if coords is None:
        if cfg.batch > dim:
            raise ValueError(f"zoo batch {cfg.batch} exceeds dimension {dim}")
        coords = rng.permutation(dim)[: cfg.batch]
    else:
        coords = np.asarray(coords, dtype=int)
        if coords.ndim != 1 or len(set(coords.tolist())) != coords.shape[0]:
            raise ValueError("coords must be a flat list of distinct indices")
        if coords.size and (coords.min() < 0 or coords.max() >= dim):
            raise ValueError(f"coordinate index out of range for dimension {dim}")
    offsets = np.zeros((coords.shape[0], dim))
    offsets[np.arange(coords.shape[0]), coords] = cfg.h
    diffs = _two_sided(f, x, offsets)
    g = np.zeros(dim)
    g[coords] = diffs / (2.0 * cfg.h)
    return GradientEstimate(g=g, queries_used=2 * coords.shape[0], estimated_coords=coords)


_DISPATCH = {"spsa": estimate_spsa, "nes": estimate_nes, "zoo": estimate_zoo}


def estimate(f, x, cfg: EstimatorConfig, rng) -> GradientEstimate:
    """Run the estimator selected by ``cfg.kind``."""
    return _DISPATCH[cfg.kind](f, x, cfg, rng)
