import numpy as np
import pytest

from bbattack.estimators import GradientEstimate
from bbattack.objective import ConstraintSet
from bbattack.optimizer import Adam, projected_step


class TestAdamGlobal:
    def test_first_step_is_signed_lr(self):
        # hand-computed: at t=1 bias correction gives m_hat/sqrt(v_hat) = sign(g)
        adam = Adam(2, lr=0.01)
        x = np.array([0.5, 0.5])
        out = adam.step(x, np.array([4.0, -2.0]))
        assert np.allclose(out - x, [-0.01, 0.01], atol=1e-6)

    def test_zero_gradient_keeps_x(self):
        adam = Adam(3, lr=0.05)
        x = np.array([0.1, 0.2, 0.3])
        for _ in range(4):
            out = adam.step(x, np.zeros(3))
            assert np.array_equal(out, x)
        assert np.array_equal(adam.m, np.zeros(3))

    def test_moments_decay_under_zero_gradient(self):
        adam = Adam(3, lr=0.05)
        adam.step(np.zeros(3), np.array([1.0, -1.0, 2.0]))
        m_before = adam.m.copy()
        adam.step(np.zeros(3), np.zeros(3))
        assert np.all(np.abs(adam.m) < np.abs(m_before))

    def test_first_step_magnitude_bound(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            adam = Adam(4, lr=0.01)
            g = rng.normal(size=4) * 10.0 ** rng.integers(-3, 3)
            out = adam.step(np.zeros(4), g)
            assert np.max(np.abs(out)) <= 0.01 * (1 + 1e-6)

    def test_non_finite_gradient_rejected(self):
        with pytest.raises(ValueError, match="non-finite"):
            Adam(2).step(np.zeros(2), np.array([np.nan, 0.0]))

    def test_convergence_on_quadratic(self):
        # minimize ||x - x*||^2 with exact gradients
        target = np.array([0.7, -0.3, 1.2])
        adam = Adam(3, lr=0.01)
        x = np.zeros(3)
        for _ in range(5000):
            x = adam.step(x, 2.0 * (x - target))
        assert np.max(np.abs(x - target)) < 1e-3


class TestAdamCoordinate:
    def test_frozen_coordinates_bitwise_unchanged(self):
        adam = Adam(3, lr=0.01, coordinate_wise=True)
        x = np.array([0.111, 0.222, 0.333])
        out = adam.step(x, np.array([5.0, 5.0, 5.0]), coords=[1])
        assert out[0] == x[0] and out[2] == x[2]
        assert out[1] != x[1]

    def test_per_coordinate_counters(self):
        adam = Adam(2, coordinate_wise=True)
        x = np.zeros(2)
        x = adam.step(x, np.ones(2), coords=[0])
        x = adam.step(x, np.ones(2), coords=[0, 1])
        assert adam.t.tolist() == [2, 1]

    def test_bias_correction_per_coordinate(self):
        # a coordinate touched for the first time moves a full lr step even if
        # other coordinates are many steps ahead
        adam = Adam(2, lr=0.01, coordinate_wise=True)
        x = np.zeros(2)
        for _ in range(10):
            x = adam.step(x, np.array([1.0, 0.0]), coords=[0])
        out = adam.step(x, np.array([0.0, 3.0]), coords=[1])
        assert abs(out[1] - x[1]) == pytest.approx(0.01, rel=1e-6)


class TestProjectedStep:
    def test_interior_point_matches_plain_step(self):
        c = ConstraintSet(np.full(3, 0.5), 0.4)
        a1, a2 = Adam(3, lr=1e-4), Adam(3, lr=1e-4)
        x = np.full(3, 0.5)
        g = np.array([1.0, -2.0, 0.5])
        assert np.array_equal(projected_step(a1, x, g, c), a2.step(x, g))

    def test_boundary_stays_on_boundary(self):
        c = ConstraintSet(np.array([0.5]), 0.1)
        adam = Adam(1, lr=0.05)
        x = np.array([0.6])  # upper ball face
        out = projected_step(adam, x, np.array([-1.0]), c)  # pushes outward
        assert out[0] == 0.6

    def test_epsilon_zero_pins_center(self):
        c = ConstraintSet(np.array([0.3, 0.7]), 0.0)
        adam = Adam(2, lr=0.5)
        x = c.center.copy()
        for _ in range(5):
            x = projected_step(adam, x, np.array([3.0, -3.0]), c)
            assert np.array_equal(x, c.center)

    def test_gradient_estimate_routes_coords(self):
        c = ConstraintSet(np.full(3, 0.5), 0.4)
        adam = Adam(3, lr=0.01, coordinate_wise=True)
        est = GradientEstimate(g=np.array([0.0, 2.0, 0.0]), queries_used=2,
                               estimated_coords=np.array([1]))
        out = projected_step(adam, np.full(3, 0.5), est, c)
        assert out[0] == 0.5 and out[2] == 0.5 and out[1] != 0.5

    def test_always_feasible(self):
        rng = np.random.default_rng(5)
        c = ConstraintSet(rng.uniform(0, 1, 4), 0.2)
        adam = Adam(4, lr=0.3)
        x = c.center.copy()
        for _ in range(50):
            x = projected_step(adam, x, rng.normal(size=4), c)
            assert c.contains(x)
