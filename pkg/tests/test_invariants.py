"""Randomized property tests for the core numeric invariants."""

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from bbattack.objective import ConstraintSet, is_misclassified, margin
from bbattack.optimizer import Adam

PROPERTY_SETTINGS = settings(max_examples=1000, deadline=None)

finite = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)


def vectors(dim_min=1, dim_max=8, lo=-100.0, hi=100.0):
    return st.integers(dim_min, dim_max).flatmap(
        lambda d: st.lists(st.floats(lo, hi, allow_nan=False), min_size=d, max_size=d)
    )


@PROPERTY_SETTINGS
@given(
    center=st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=8),
    epsilon=st.floats(0.0, 2.0, allow_nan=False),
    noise=st.lists(finite, min_size=8, max_size=8),
)
def test_projection_idempotent_and_feasible(center, epsilon, noise):
    c = ConstraintSet(np.array(center), epsilon)
    x = np.array(noise[: len(center)])
    once = c.project(x)
    assert np.array_equal(c.project(once), once)
    assert np.all(np.abs(once - c.center) <= epsilon + 1e-12)
    assert once.min() >= 0.0 and once.max() <= 1.0


@PROPERTY_SETTINGS
@given(logits=vectors(dim_min=2, dim_max=6), shift=finite, y_pick=st.integers(0, 5))
def test_margin_shift_invariance(logits, shift, y_pick):
    z = np.array(logits)
    y = y_pick % len(z)
    assert abs(margin(z + shift, y) - margin(z, y)) < 1e-9


@PROPERTY_SETTINGS
@given(logits=vectors(dim_min=2, dim_max=6), y_pick=st.integers(0, 5))
def test_margin_misclassification_sign_consistency(logits, y_pick):
    z = np.array(logits)
    y = y_pick % len(z)
    m = margin(z, y)
    mis = is_misclassified(z, y)
    if m < 0:
        assert mis
    elif m > 0:
        assert not mis
    else:
        # exact tie: argmax breaks toward the smaller index
        assert mis == (int(np.argmax(z)) != y)


@PROPERTY_SETTINGS
@given(
    grad=vectors(dim_min=1, dim_max=6, lo=-1e6, hi=1e6),
    lr=st.floats(1e-4, 1.0, allow_nan=False),
)
def test_adam_first_step_magnitude_bound(grad, lr):
    g = np.array(grad)
    adam = Adam(len(g), lr=lr)
    out = adam.step(np.zeros(len(g)), g)
    assert np.max(np.abs(out)) <= lr * (1 + 1e-6)


@PROPERTY_SETTINGS
@given(
    x=vectors(dim_min=2, dim_max=8),
    grad=vectors(dim_min=8, dim_max=8, lo=-10.0, hi=10.0),
    mask=st.lists(st.booleans(), min_size=8, max_size=8),
    data=st.data(),
)
def test_coordinate_mode_isolation(x, grad, mask, data):
    xv = np.array(x)
    d = len(xv)
    g = np.array(grad[:d])
    coords = [i for i in range(d) if mask[i]]
    adam = Adam(d, lr=0.05, coordinate_wise=True)
    steps = data.draw(st.integers(1, 3))
    cur = xv
    for _ in range(steps):
        cur = adam.step(cur, g, coords=coords)
    frozen = [i for i in range(d) if i not in coords]
    for i in frozen:
        assert cur[i] == xv[i]  # bitwise identical
