"""Small dense classifiers with exact inference, input gradients, and weight files.

A model is a stack of fully connected layers described by ``ModelSpec``: an
activation (identity, relu, or tanh) follows every hidden layer and the output
layer emits raw logits. Everything runs in float64 numpy; models are immutable
after construction so they can be queried from concurrent workers.

``forward`` is the single choke point all attacks query (the oracle wrapper in
:mod:`bbattack.oracle` counts those calls); ``input_gradient`` provides the
white-box reverse-mode path used only by the PGD baseline and by tests.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

MODEL_MAGIC = "BBMODEL v1"

BUILTIN_NAMES = ("linear2d", "mlp_small", "mlp_tanh")

# Stream identifiers so different builtins never share a weight stream.
_BUILTIN_CODES = {"linear2d": 1, "mlp_small": 2, "mlp_tanh": 3}

_ACTIVATIONS = {
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
    # relu subgradient at exactly 0 is 0
    "relu": (lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(float)),
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
}


class ModelFormatError(ValueError):
    """Raised when a weight file is malformed; the message names the bad field."""


@dataclass(frozen=True)
class InputVector:
    """A flat real input together with the interval its coordinates live in."""

    values: np.ndarray
    box_lo: float = 0.0
    box_hi: float = 1.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1:
            raise ValueError(f"input must be a flat vector, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("input contains non-finite values")
        if not self.box_lo < self.box_hi:
            raise ValueError(f"invalid box [{self.box_lo}, {self.box_hi}]")
        if v.min(initial=self.box_hi) < self.box_lo or v.max(initial=self.box_lo) > self.box_hi:
            raise ValueError("input lies outside its declared box")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ModelSpec:
    """Weights of a dense classifier.

    ``layer_dims`` runs input dim first, class count last. ``activations`` has
    one entry per hidden layer (so a single-layer linear model has none).
    Weight matrices are row-major ``(fan_out, fan_in)``.
    """

    layer_dims: tuple
    activations: tuple
    weights: tuple = field(repr=False)
    biases: tuple = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.layer_dims)
        acts = tuple(str(a) for a in self.activations)
        if len(dims) < 2:
            raise ValueError("need at least an input and an output layer")
        if any(d <= 0 for d in dims):
            raise ValueError(f"layer dims must be positive, got {dims}")
        if dims[-1] < 2:
            raise ValueError(f"class count must be >= 2, got {dims[-1]}")
        if len(acts) != len(dims) - 2:
            raise ValueError(
                f"expected {len(dims) - 2} hidden activations for dims {dims}, got {len(acts)}"
            )
        for a in acts:
            if a not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("need one weight matrix and one bias vector per layer")
        ws, bs = [], []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            w = np.asarray(w, dtype=float)
            b = np.asarray(b, dtype=float)
            if w.shape != (dims[i + 1], dims[i]):
                raise ValueError(
                    f"layer {i + 1} weights: expected shape {(dims[i + 1], dims[i])}, got {w.shape}"
                )
            if b.shape != (dims[i + 1],):
                raise ValueError(
                    f"layer {i + 1} bias: expected shape {(dims[i + 1],)}, got {b.shape}"
                )
            if not np.all(np.isfinite(w)):
                raise ValueError(f"layer {i + 1} weights: non-finite value")
            if not np.all(np.isfinite(b)):
                raise ValueError(f"layer {i + 1} bias: non-finite value")
            w = w.copy()
            b = b.copy()
            w.flags.writeable = False
            b.flags.writeable = False
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "layer_dims", dims)
        object.__setattr__(self, "activations", acts)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def n_classes(self) -> int:
        return self.layer_dims[-1]

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(repr(self.layer_dims).encode())
        h.update(repr(self.activations).encode())
        for w, b in zip(self.weights, self.biases):
            h.update(w.tobytes())
            h.update(b.tobytes())
        return h.hexdigest()[:16]


def _as_matrix(x, input_dim):
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    X = np.atleast_2d(X)
    if X.ndim != 2 or X.shape[1] != input_dim:
        raise ValueError(
            f"input dimension {X.shape[-1]} does not match model input dimension {input_dim}"
        )
    if not np.all(np.isfinite(X)):
        raise ValueError("input contains non-finite values")
    return X, single


def forward(model: ModelSpec, x) -> np.ndarray:
    """Logits for a single input ``(D,)`` or a batch ``(n, D)``.

    Deterministic in (model, x).  A batch of n rows counts as n black-box
    evaluations when routed through an oracle.
    """
    if isinstance(x, InputVector):
        x = x.values
    A, single = _as_matrix(x, model.input_dim)
    last = model.n_layers - 1
    for i in range(model.n_layers):
        Z = A @ model.weights[i].T + model.biases[i]
        A = Z if i == last else _ACTIVATIONS[model.activations[i]][0](Z)
    return A[0] if single else A


def input_gradient(model: ModelSpec, x, grad_logits) -> np.ndarray:
    """Reverse-mode gradient of ``grad_logits @ logits(x)`` with respect to x.

    ``grad_logits`` is the cotangent of the scalar objective in logit space
    (e.g. ``e_y - e_j`` for a logit margin). White-box access: this never
    touches the query ledger.
    """
    if isinstance(x, InputVector):
        x = x.values
    X, single = _as_matrix(x, model.input_dim)
    if not single:
        raise ValueError("input_gradient expects a single input vector")
    g = np.asarray(grad_logits, dtype=float)
    if g.shape != (model.n_classes,):
        raise ValueError(
            f"grad_logits shape {g.shape} does not match class count {model.n_classes}"
        )
    a = X[0]
    pre = []  # pre-activation of each hidden layer
    last = model.n_layers - 1
    for i in range(model.n_layers):
        z = model.weights[i] @ a + model.biases[i]
        if i != last:
            pre.append(z)
            a = _ACTIVATIONS[model.activations[i]][0](z)
    delta = g
    for i in range(last, -1, -1):
        delta = model.weights[i].T @ delta
        if i > 0:
            delta = delta * _ACTIVATIONS[model.activations[i - 1]][1](pre[i - 1])
    return delta


def logit_gradient(model: ModelSpec, x, k: int) -> np.ndarray:
    """Gradient of a single logit; convenience wrapper over input_gradient."""
    cot = np.zeros(model.n_classes)
    cot[int(k)] = 1.0
    return input_gradient(model, x, cot)


# ---------------------------------------------------------------------------
# Built-in models
# ---------------------------------------------------------------------------

# linear2d's decision boundary is the diagonal midline of the unit box; the
# gauss2d dataset places its two blobs symmetrically about that line.
_DIAG = np.array([1.0, 1.0]) / np.sqrt(2.0)
_BOX_CENTER = np.array([0.5, 0.5])
_LINEAR2D_GAIN = 12.0
_LINEAR2D_JITTER = 0.05

# Logit gain on the output layer so builtin margins are O(1) rather than
# O(0.1); the stop rule and margin comparisons need a usable logit scale.
_MLP_SHAPES = {
    "mlp_small": ((8, 16, 3), ("tanh",), 8.0),
    "mlp_tanh": ((5, 12, 3), ("tanh",), 8.0),
}


def _uniform_layers(rng, dims, out_gain=1.0):
    # seeded uniform [-0.5, 0.5] scaled by 1/sqrt(fan_in), biases included
    ws, bs = [], []
    for i in range(len(dims) - 1):
        scale = 1.0 / np.sqrt(dims[i])
        ws.append(rng.uniform(-0.5, 0.5, size=(dims[i + 1], dims[i])) * scale)
        bs.append(rng.uniform(-0.5, 0.5, size=dims[i + 1]) * scale)
    ws[-1] = ws[-1] * out_gain
    bs[-1] = bs[-1] * out_gain
    return ws, bs


def make_builtin(name: str, seed: int = 0) -> ModelSpec:
    """Deterministically construct one of the built-in models.

    ``linear2d`` is a two-class linear classifier whose boundary is the
    (lightly seed-jittered) diagonal of the unit box; ``mlp_small`` and
    ``mlp_tanh`` are one-hidden-layer tanh networks of 8 and 5 inputs drawn
    from the documented uniform generator.
    """
    if name not in _BUILTIN_CODES:
        raise ValueError(f"unknown builtin model {name!r}; choose from {BUILTIN_NAMES}")
    rng = np.random.default_rng([_BUILTIN_CODES[name], int(seed)])
    if name == "linear2d":
        w = _LINEAR2D_GAIN * np.vstack([-_DIAG, _DIAG])
        b = -w @ _BOX_CENTER
        w = w + _LINEAR2D_JITTER * rng.uniform(-0.5, 0.5, size=(2, 2)) / np.sqrt(2.0)
        b = b + _LINEAR2D_JITTER * rng.uniform(-0.5, 0.5, size=2) / np.sqrt(2.0)
        return ModelSpec((2, 2), (), (w,), (b,))
    dims, acts, gain = _MLP_SHAPES[name]
    ws, bs = _uniform_layers(rng, dims, out_gain=gain)
    return ModelSpec(dims, acts, tuple(ws), tuple(bs))


# ---------------------------------------------------------------------------
# Weight files
# ---------------------------------------------------------------------------


def _fmt(arr) -> str:
    # repr round-trips float64 exactly, which keeps save/load bit-identical
    return " ".join(repr(float(v)) for v in np.asarray(arr).ravel())


def save_model(model: ModelSpec, path) -> None:
    """Write the text weight format: magic, dims, activations, then W/b lines."""
    lines = [
        MODEL_MAGIC,
        " ".join(str(d) for d in model.layer_dims),
        " ".join(model.activations),
    ]
    for w, b in zip(model.weights, model.biases):
        lines.append(_fmt(w))
        lines.append(_fmt(b))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_floats(line, count, what):
    toks = line.split()
    if len(toks) != count:
        raise ModelFormatError(f"{what}: expected {count} values, got {len(toks)}")
    try:
        vals = np.array([float(t) for t in toks])
    except ValueError as exc:
        raise ModelFormatError(f"{what}: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise ModelFormatError(f"{what}: non-finite value")
    return vals


def load_model(path) -> ModelSpec:
    """Parse a weight file; raise ModelFormatError naming the offending field."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != MODEL_MAGIC:
        raise ModelFormatError(f"bad magic line, expected {MODEL_MAGIC!r}")
    if len(lines) < 3:
        raise ModelFormatError("truncated file: missing dims or activations line")
    try:
        dims = tuple(int(t) for t in lines[1].split())
    except ValueError as exc:
        raise ModelFormatError(f"layer dims: {exc}") from exc
    if len(dims) < 2:
        raise ModelFormatError(f"layer dims: need at least 2 entries, got {len(dims)}")
    acts = tuple(lines[2].split())
    n_layers = len(dims) - 1
    expected = 3 + 2 * n_layers
    if len(lines) < expected:
        raise ModelFormatError(
            f"truncated file: expected {expected} lines for dims {dims}, got {len(lines)}"
        )
    ws, bs = [], []
    for i in range(n_layers):
        w = _parse_floats(lines[3 + 2 * i], dims[i + 1] * dims[i], f"layer {i + 1} weights")
        b = _parse_floats(lines[4 + 2 * i], dims[i + 1], f"layer {i + 1} bias")
        ws.append(w.reshape(dims[i + 1], dims[i]))
        bs.append(b)
    try:
        return ModelSpec(dims, acts, tuple(ws), tuple(bs))
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc
