"""Query-counted access to a model's logits.

Attacks never see weights; they call a :class:`LogitOracle`, and every logits
evaluation (each row of a batched call counts separately) bumps the attached
:class:`QueryLedger` by one. One ledger belongs to exactly one attack run.
"""

import threading

import numpy as np

from . import models, objective


class QueryLedger:
    """Monotone counter of forward passes."""

    def __init__(self):
        self._total = 0
        self._lock = threading.Lock()

    @property
    def total(self) -> int:
        return self._total

    def add(self, n: int = 1) -> None:
        if n < 0:
            raise ValueError("ledger can only increase")
        with self._lock:
            self._total += int(n)

    def __repr__(self):
        return f"QueryLedger(total={self._total})"


class LogitOracle:
    """Black-box view of a model: logits in, queries counted."""

    def __init__(self, model: models.ModelSpec, ledger: QueryLedger | None = None):
        self.model = model
        self.ledger = ledger if ledger is not None else QueryLedger()

    def logits(self, x) -> np.ndarray:
        out = models.forward(self.model, x)
        if out.ndim != 1:
            raise ValueError("logits() takes a single input; use logits_many for batches")
        self.ledger.add(1)
        return out

    def logits_many(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise ValueError(f"expected an (n, D) batch, got shape {X.shape}")
        out = models.forward(self.model, X)
        self.ledger.add(X.shape[0])
        return out

    def evaluate(self, x, y: int):
        """One query: (margin, misclassified) at x for true label y."""
        z = self.logits(x)
        return objective.margin(z, y), objective.is_misclassified(z, y)

    def margin_fn(self, y: int):
        """Batched black-box objective f: (n, D) -> (n,) margins, all counted."""

        def f(X):
            return objective.margin_many(self.logits_many(X), y)

        return f
