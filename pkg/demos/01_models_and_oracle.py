"""Built-in models, the query ledger, and white-box gradients.

Walks through the oracle layer every attack sits on: deterministic tiny
classifiers, query-counted logits, analytic input gradients checked against
finite differences, and the text weight format.
"""

import tempfile

import numpy as np

import bbattack as bb

print("=" * 64)
print("1. Built-in models")
print("=" * 64)
for name in bb.BUILTIN_NAMES:
    m = bb.make_builtin(name, seed=0)
    print(f"  {name:10s} dims={m.layer_dims} activations={m.activations}")

model = bb.make_builtin("mlp_tanh", 42)
x = np.full(model.input_dim, 0.5)
print("\nlogits at the box center:", np.round(bb.forward(model, x), 4))

print("\n" + "=" * 64)
print("2. Query accounting")
print("=" * 64)
oracle = bb.LogitOracle(model)
oracle.logits(x)
oracle.logits_many(np.tile(x, (5, 1)))
print(f"  1 single + 1 batch-of-5 call -> ledger total = {oracle.ledger.total}")

print("\n" + "=" * 64)
print("3. Analytic gradient vs central finite differences")
print("=" * 64)
y = int(np.argmax(bb.forward(model, x)))
g = bb.margin_input_gradient(model, x, y)
h = 1e-5
fd = np.zeros_like(x)
for i in range(x.size):
    xp, xm = x.copy(), x.copy()
    xp[i] += h
    xm[i] -= h
    fd[i] = (bb.margin(bb.forward(model, xp), y) - bb.margin(bb.forward(model, xm), y)) / (2 * h)
print("  analytic :", np.round(g, 6))
print("  numeric  :", np.round(fd, 6))
print("  rel error:", np.linalg.norm(g - fd) / np.linalg.norm(fd))

print("\n" + "=" * 64)
print("4. Weight file round trip")
print("=" * 64)
with tempfile.NamedTemporaryFile(mode="w", suffix=".bbmodel", delete=False) as fh:
    path = fh.name
bb.save_model(model, path)
reloaded = bb.load_model(path)
same = np.array_equal(bb.forward(model, x), bb.forward(reloaded, x))
print(f"  saved to {path}")
print(f"  bit-identical logits after reload: {same}")
