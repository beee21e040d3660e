"""Complete attack loops: gradient-free (SPSA / NES / ZOO-ADAM) and white-box PGD.

A gradient-free run starts with one verification query at the clean point
(already-misclassified inputs are immediate successes at a cost of exactly one
query), random-initializes inside the epsilon-ball, and then repeats: estimate
the margin gradient, take a projected Adam step, and spend one more query on
the new iterate to record its margin. It stops once the margin drops below the
stop threshold or the iteration cap is hit, so the exact query count of a full
run is ``1 + sum over iterations of (2*batch + 1)``.

Success means some recorded iterate was misclassified; stopping is governed by
the margin threshold. A run can therefore succeed without ever reaching the
threshold, and both facts are reported on the trace.

PGD takes sign-of-gradient steps on the same margin objective using analytic
gradients (not counted as queries); its trace counts margin evaluations only
and is flagged white-box.
"""

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from . import models, objective
from .estimators import EstimatorConfig, estimate
from .objective import ConstraintSet
from .optimizer import Adam, projected_step
from .oracle import LogitOracle, QueryLedger

INIT_MODES = ("random_ball", "zero")


class AttackError(RuntimeError):
    """An attack run failed; the message carries iteration context."""


@dataclass
class AttackConfig:
    """Knobs of a gradient-free attack run.

    Defaults follow the reference configuration: SPSA perturbation 0.01, Adam
    learning rate 0.01, at most 100 iterations, batch 8192, stop once the
    margin drops below -5.0, random l-infinity-ball initialization. epsilon is
    in input units and has no universal default, so it is required.
    """

    epsilon: float
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    lr: float = 0.01
    max_iters: int = 100
    stop_threshold: float = objective.STOP_THRESHOLD_DEFAULT
    init: str = "random_ball"
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if int(self.max_iters) < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if not np.isfinite(self.stop_threshold):
            raise ValueError("stop_threshold must be finite; use a large negative "
                             "value to disable early stopping")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}; choose from {INIT_MODES}")
        self.max_iters = int(self.max_iters)


@dataclass
class PgdConfig:
    """Knobs of the white-box PGD baseline (sign steps on the margin)."""

    epsilon: float
    step_size: float
    iters: int = 20
    init: str = "random_ball"
    seed: int = 0

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.step_size < 0:
            raise ValueError(f"step_size must be >= 0, got {self.step_size}")
        if self.init not in INIT_MODES:
            raise ValueError(f"unknown init mode {self.init!r}; choose from {INIT_MODES}")
        self.iters = int(self.iters)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    cumulative_queries: int
    margin: float
    misclassified: bool
    iterate_hash: str


@dataclass
class AttackTrace:
    """Everything one attack run produced.

    ``queries_to_success`` is the cumulative query count at the first recorded
    misclassified iterate (None if the attack failed). For PGD traces the
    query axis counts margin evaluations only and ``white_box`` is set.
    """

    records: list
    success: bool
    queries_to_success: int | None
    final_x: np.ndarray
    white_box: bool = False

    def __post_init__(self):
        if not self.records:
            raise ValueError("a trace needs at least one record")

    @property
    def total_queries(self) -> int:
        return self.records[-1].cumulative_queries

    @property
    def margins(self) -> np.ndarray:
        return np.array([r.margin for r in self.records])

    def best_margin(self) -> float:
        return float(self.margins.min())

    def final_margin(self) -> float:
        return float(self.records[-1].margin)


def best_margin(trace: AttackTrace) -> float:
    """Lowest margin over all recorded iterates."""
    return trace.best_margin()


def final_margin(trace: AttackTrace) -> float:
    """Margin at the last recorded iterate."""
    return trace.final_margin()


def _iterate_hash(x) -> str:
    return hashlib.sha1(np.ascontiguousarray(x, dtype=np.float64).tobytes()).hexdigest()[:12]


def _as_input_vector(x0) -> models.InputVector:
    if isinstance(x0, models.InputVector):
        return x0
    return models.InputVector(np.asarray(x0, dtype=float))


def margin_input_gradient(model: models.ModelSpec, x, y: int) -> np.ndarray:
    """Analytic gradient of the margin at x (white-box, not query-counted)."""
    logits = models.forward(model, x)
    cot = np.zeros(model.n_classes)
    cot[int(y)] = 1.0
    cot[objective.runner_up(logits, y)] = -1.0
    return models.input_gradient(model, x, cot)


def run_gradient_free_attack(model: models.ModelSpec, x0, y: int,
                             cfg: AttackConfig) -> AttackTrace:
    """Attack one point with the estimator selected by ``cfg.estimator.kind``."""
    point = _as_input_vector(x0)
    if point.dim != model.input_dim:
        raise ValueError(
            f"point dimension {point.dim} does not match model input {model.input_dim}"
        )
    cset = ConstraintSet.around(point, cfg.epsilon)
    oracle = LogitOracle(model, QueryLedger())

    m0, mis0 = oracle.evaluate(point.values, y)
    records = [TraceRecord(0, oracle.ledger.total, m0, mis0, _iterate_hash(point.values))]
    if mis0:
        return AttackTrace(records, True, oracle.ledger.total, point.values.copy())

    rng = np.random.default_rng(cfg.seed)
    x = cset.random_init(rng) if cfg.init == "random_ball" else point.values.copy()
    adam = Adam(point.dim, lr=cfg.lr, coordinate_wise=(cfg.estimator.kind == "zoo"))
    f = oracle.margin_fn(y)

    success = False
    queries_to_success = None
    for it in range(1, cfg.max_iters + 1):
        try:
            g = estimate(f, x, cfg.estimator, rng)
        except Exception as exc:
            raise AttackError(f"gradient estimation failed at iteration {it}: {exc}") from exc
        x = projected_step(adam, x, g, cset)
        m, mis = oracle.evaluate(x, y)
        records.append(TraceRecord(it, oracle.ledger.total, m, mis, _iterate_hash(x)))
        if mis and not success:
            success = True
            queries_to_success = oracle.ledger.total
        if m < cfg.stop_threshold:
            break
    return AttackTrace(records, success, queries_to_success, x)


def run_pgd(model: models.ModelSpec, x0, y: int, cfg: PgdConfig) -> AttackTrace:
    """White-box baseline; keeps the best (lowest-margin) iterate as its output."""
    point = _as_input_vector(x0)
    if point.dim != model.input_dim:
        raise ValueError(
            f"point dimension {point.dim} does not match model input {model.input_dim}"
        )
    cset = ConstraintSet.around(point, cfg.epsilon)
    oracle = LogitOracle(model, QueryLedger())

    m0, mis0 = oracle.evaluate(point.values, y)
    records = [TraceRecord(0, oracle.ledger.total, m0, mis0, _iterate_hash(point.values))]
    best_x, best_m = point.values.copy(), m0
    success = mis0
    queries_to_success = oracle.ledger.total if mis0 else None

    rng = np.random.default_rng(cfg.seed)
    x = cset.random_init(rng) if cfg.init == "random_ball" else point.values.copy()
    for it in range(1, cfg.iters + 1):
        g = margin_input_gradient(model, x, y)
        x = cset.project(x - cfg.step_size * np.sign(g))
        m, mis = oracle.evaluate(x, y)
        records.append(TraceRecord(it, oracle.ledger.total, m, mis, _iterate_hash(x)))
        if m < best_m:
            best_x, best_m = x.copy(), m
        if mis and not success:
            success = True
            queries_to_success = oracle.ledger.total
    return AttackTrace(records, success, queries_to_success, best_x, white_box=True)


def config_for_kind(cfg: AttackConfig, kind: str, batch: int | None = None) -> AttackConfig:
    """Copy of ``cfg`` switched to another estimator kind / batch size."""
    est = replace(cfg.estimator, kind=kind, **({} if batch is None else {"batch": int(batch)}))
    return replace(cfg, estimator=est)
