"""Synthetic desk-scale evaluation datasets and their text file format.

Three generators, all deterministic in (kind, n, seed):

* ``gauss2d`` — two Gaussian blobs in the unit box, symmetric about the
  diagonal midline that the ``linear2d`` builtin separates.
* ``rings`` — an inner disc (class 0) and a surrounding annulus (class 1)
  around the box center, labeled by the generating radius band.
* ``mlp_teacher`` — uniform points labeled by a teacher network's argmax
  (default teacher: ``mlp_small`` with the same seed), so the paired model's
  clean accuracy is 100% by construction. Draws are rejection-sampled into the
  band of teacher margins at most ``TEACHER_MARGIN_CAP``: a random network's
  boundaries are sparse in the box, and without the band most uniform points
  would sit unreachably deep inside their class region.
"""

from dataclasses import dataclass

import numpy as np

from . import models, objective

DATA_MAGIC = "BBDATA v1"

DATASET_KINDS = ("gauss2d", "rings", "mlp_teacher")

# gauss2d geometry; blob means sit 7+ sigma apart across linear2d's boundary
GAUSS2D_MEANS = (np.array([0.35, 0.35]), np.array([0.65, 0.65]))
GAUSS2D_SIGMA = 0.06

_RINGS_CENTER = np.array([0.5, 0.5])
_RINGS_INNER = (0.0, 0.15)
_RINGS_OUTER = (0.25, 0.38)

TEACHER_MARGIN_CAP = 0.4


@dataclass(frozen=True)
class EvalDataset:
    name: str
    points: np.ndarray  # (n, D)
    labels: np.ndarray  # (n,) int
    box_lo: float = 0.0
    box_hi: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        labs = np.asarray(self.labels, dtype=int)
        if pts.ndim != 2 or labs.shape != (pts.shape[0],):
            raise ValueError("points must be (n, D) with one label per point")
        if pts.shape[0] < 1:
            raise ValueError("dataset needs at least one point")
        if not self.box_lo < self.box_hi:
            raise ValueError(f"invalid box [{self.box_lo}, {self.box_hi}]")
        if pts.min() < self.box_lo or pts.max() > self.box_hi:
            raise ValueError("dataset contains points outside the box")
        if labs.min() < 0:
            raise ValueError("labels must be non-negative")
        pts = pts.copy()
        labs = labs.copy()
        pts.flags.writeable = False
        labs.flags.writeable = False
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labs)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def point(self, i: int) -> models.InputVector:
        return models.InputVector(self.points[i].copy(), self.box_lo, self.box_hi)


def make_dataset(kind: str, n: int, seed: int = 0,
                 model: models.ModelSpec | None = None) -> EvalDataset:
    """Generate a dataset; ``model`` overrides the mlp_teacher labeler."""
    if kind not in DATASET_KINDS:
        raise ValueError(f"unknown dataset kind {kind!r}; choose from {DATASET_KINDS}")
    n = int(n)
    if n < 1:
        raise ValueError(f"need n >= 1 points, got {n}")
    rng = np.random.default_rng([17, int(seed)])
    if kind == "gauss2d":
        labels = np.arange(n) % 2
        means = np.stack([GAUSS2D_MEANS[l] for l in labels])
        pts = means + GAUSS2D_SIGMA * rng.standard_normal((n, 2))
        pts = np.clip(pts, 0.0, 1.0)
    elif kind == "rings":
        labels = np.arange(n) % 2
        bands = np.where(labels[:, None] == 0, _RINGS_INNER, _RINGS_OUTER)
        radius = rng.uniform(bands[:, 0], bands[:, 1])
        angle = rng.uniform(0.0, 2.0 * np.pi, size=n)
        pts = _RINGS_CENTER + radius[:, None] * np.stack([np.cos(angle), np.sin(angle)], axis=1)
        pts = np.clip(pts, 0.0, 1.0)
    else:
        teacher = model if model is not None else models.make_builtin("mlp_small", seed)
        kept, cap_draws = [], 1000 * n
        drawn = 0
        while len(kept) < n and drawn < cap_draws:
            chunk = rng.uniform(0.0, 1.0, size=(max(n, 64), teacher.input_dim))
            drawn += chunk.shape[0]
            logits = models.forward(teacher, chunk)
            labs = np.argmax(logits, axis=1)
            top = logits[np.arange(chunk.shape[0]), labs]
            masked = logits.copy()
            masked[np.arange(chunk.shape[0]), labs] = -np.inf
            margins = top - masked.max(axis=1)
            for row, lab, mg in zip(chunk, labs, margins):
                if mg <= TEACHER_MARGIN_CAP and len(kept) < n:
                    kept.append((row, lab))
        if len(kept) < n:
            raise ValueError(
                f"teacher margins rarely fall below {TEACHER_MARGIN_CAP}; "
                f"could not collect {n} points"
            )
        pts = np.stack([row for row, _ in kept])
        labels = np.array([lab for _, lab in kept])
    return EvalDataset(kind, pts, labels, 0.0, 1.0, seed)


def clean_predictions(model: models.ModelSpec, ds: EvalDataset) -> np.ndarray:
    return np.argmax(models.forward(model, ds.points), axis=1)


def clean_accuracy(model: models.ModelSpec, ds: EvalDataset) -> float:
    """Fraction of points the model classifies as labeled (argmax ties lose)."""
    correct = 0
    for i in range(ds.n):
        z = models.forward(model, ds.points[i])
        correct += not objective.is_misclassified(z, int(ds.labels[i]))
    return correct / ds.n


# ---------------------------------------------------------------------------
# Dataset files: magic line, then one "label v1 v2 ..." line per point.
# The format carries no box metadata; datasets round-trip in the unit box.
# ---------------------------------------------------------------------------


def save_dataset(ds: EvalDataset, path) -> None:
    if not (ds.box_lo == 0.0 and ds.box_hi == 1.0):
        raise ValueError("dataset files only support the unit box")
    lines = [DATA_MAGIC]
    for label, row in zip(ds.labels, ds.points):
        lines.append(str(int(label)) + " " + " ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dataset(path, name: str | None = None) -> EvalDataset:
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines or lines[0].strip() != DATA_MAGIC:
        raise ValueError(f"bad magic line, expected {DATA_MAGIC!r}")
    if len(lines) < 2:
        raise ValueError("dataset file has no points")
    labels, rows = [], []
    width = None
    for k, ln in enumerate(lines[1:], start=1):
        toks = ln.split()
        try:
            labels.append(int(toks[0]))
            rows.append([float(t) for t in toks[1:]])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"point {k}: {exc}") from exc
        if width is None:
            width = len(rows[-1])
        elif len(rows[-1]) != width:
            raise ValueError(f"point {k}: expected {width} features, got {len(rows[-1])}")
    if width == 0:
        raise ValueError("points need at least one feature")
    if name is None:
        name = str(path)
    return EvalDataset(name, np.array(rows), np.array(labels), 0.0, 1.0, None)
