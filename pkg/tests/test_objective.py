from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from microinit.dynamics import LorenzModel, SystemModel, iterate, sample_attractor, trajectory
from microinit.objective import (
    CostEvaluationError,
    Objective,
    cost,
    cost_gradient,
    expected_cost_floor,
    predict_observations,
)
from microinit.observation import ObservationSeries, Operator, add_noise, generate_series


@dataclass(frozen=True)
class IdentityModel(SystemModel):
    """x -> x; makes the cost an explicit quadratic."""

    n: int = 3
    dt: float = 1.0

    @property
    def dim(self):
        return self.n

    def _kernel(self, states, count, stride, out, fail):
        out[:] = states[:, None, :]

    def sample_box(self, rng):
        return rng.uniform(-1, 1, self.n)


def first_component(x):
    return np.asarray(x)[..., 0]


def test_predictions_match_generated_series(lorenz, lorenz_point):
    s = generate_series(lorenz, Operator.CUBE_SUM, lorenz_point, 10, 3)
    assert np.array_equal(predict_observations(lorenz, Operator.CUBE_SUM, lorenz_point, 10, 3),
                          s.values)
    by_iterate = [Operator.CUBE_SUM(iterate(lorenz, lorenz_point, 3 * k)) for k in range(11)]
    assert np.array_equal(s.values, by_iterate)


def test_predictions_short_case(lorenz, lorenz_point):
    p = predict_observations(lorenz, Operator.CUBE_SUM, lorenz_point, 1, 1)
    assert np.array_equal(p, Operator.CUBE_SUM(trajectory(lorenz, lorenz_point, 2)))


def test_cost_zero_at_truth(lorenz, lorenz_point):
    s = generate_series(lorenz, Operator.CUBE_SUM, lorenz_point, 50, 2)
    ev = cost(lorenz, Operator.CUBE_SUM, s, lorenz_point)
    assert ev.value <= 1e-20
    assert np.all(ev.residuals == 0)


@given(st.integers(0, 10_000))
def test_cost_zero_at_truth_property(seed):
    model = LorenzModel()
    x = sample_attractor(model, np.random.default_rng(seed), burn_in=500)
    s = generate_series(model, Operator.CUBE_SUM, x, 20, 2)
    assert cost(model, Operator.CUBE_SUM, s, x).value == 0.0


def test_cost_value_is_mean_square_over_terms(lorenz, lorenz_point):
    s = generate_series(lorenz, Operator.CUBE_SUM, lorenz_point, 30, 2)
    x = lorenz_point + 0.01
    ev = cost(lorenz, Operator.CUBE_SUM, s, x)
    assert ev.value == pytest.approx(np.sum(ev.residuals**2) / (31 * s.sigma_y**2), rel=1e-14)
    assert ev.value > 0
    assert cost(lorenz, Operator.CUBE_SUM, s, x).value == ev.value


def test_constant_predictor_scores_one_plus_noise(lorenz, lorenz_point):
    s = generate_series(lorenz, Operator.CUBE_SUM, lorenz_point, 10_000, 2)
    n = add_noise(s, 0.3, np.random.default_rng(0))
    const = np.full(n.values.size, n.values.mean())
    ev = cost(lorenz, Operator.CUBE_SUM, n, lorenz_point, predictor=lambda _: const)
    assert ev.value == pytest.approx(1 + 0.3**2, rel=0.05)


def test_noise_decomposition_at_truth(lorenz, lorenz_point):
    s = generate_series(lorenz, Operator.CUBE_SUM, lorenz_point, 10_000, 2)
    n = add_noise(s, 0.3, np.random.default_rng(1))
    assert cost(lorenz, Operator.CUBE_SUM, n, lorenz_point).value == pytest.approx(0.09, rel=0.05)


def test_product_mirror_pair_has_equal_cost(lorenz, lorenz_point):
    # (x, y, z) -> (-x, -y, z) commutes with the Lorenz flow and preserves xyz
    s = generate_series(lorenz, Operator.PRODUCT, lorenz_point, 30, 2)
    x = lorenz_point + np.array([0.1, -0.2, 0.3])
    mirror = x * np.array([-1.0, -1.0, 1.0])
    assert cost(lorenz, Operator.PRODUCT, s, x).value == cost(lorenz, Operator.PRODUCT, s, mirror).value


def test_product_mirror_gradient_equivariance(lorenz, lorenz_point):
    s = generate_series(lorenz, Operator.PRODUCT, lorenz_point, 20, 2)
    flip = np.array([-1.0, -1.0, 1.0])
    x = lorenz_point + np.array([0.1, -0.2, 0.3])
    g = cost_gradient(lorenz, Operator.PRODUCT, s, x)
    g_m = cost_gradient(lorenz, Operator.PRODUCT, s, x * flip)
    assert np.allclose(g_m, g * flip, rtol=1e-6, atol=1e-10)


def test_gradient_vanishes_at_noiseless_minimum(lorenz, lorenz_point):
    s = generate_series(lorenz, Operator.CUBE_SUM, lorenz_point, 50, 2)
    assert np.linalg.norm(cost_gradient(lorenz, Operator.CUBE_SUM, s, lorenz_point)) <= 1e-5


@given(st.integers(0, 10_000))
def test_gradient_agrees_with_coarse_fd(seed):
    model = LorenzModel()
    rng = np.random.default_rng(seed)
    truth = sample_attractor(model, rng, burn_in=500)
    s = generate_series(model, Operator.CUBE_SUM, truth, 10, 2)
    x = truth + rng.normal(scale=0.5, size=3)
    obj = Objective(model, Operator.CUBE_SUM, s)
    fine = obj.gradient(x)
    # independent oracle: plain loop, absolute step 1e-4
    coarse = np.empty(3)
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1e-4
        coarse[i] = (obj(x + e) - obj(x - e)) / 2e-4
    scale = np.max(np.abs(coarse))
    assert np.all(np.abs(fine - coarse) <= 1e-2 * np.maximum(np.abs(coarse), 1e-3 * scale))


def test_gradient_matches_closed_form_quadratic():
    model = IdentityModel()
    y = np.array([0.3, -0.5, 1.2, 0.8])
    s = ObservationSeries(y, m=1, dt=1.0)
    x = np.array([0.7, 2.0, -1.0])
    g = Objective(model, first_component, s).gradient(x)
    analytic = np.sum(2 * (x[0] - y)) / (y.size * s.sigma_y**2)
    assert g[0] == pytest.approx(analytic, rel=1e-6)
    assert g[1] == 0 and g[2] == 0


def test_overflow_is_a_cost_evaluation_error():
    model = LorenzModel(dt=1.0)
    s = ObservationSeries(np.array([1.0, 2.0, 3.0]), m=5, dt=1.0)
    with pytest.raises(CostEvaluationError):
        cost(model, Operator.CUBE_SUM, s, np.array([1e3, 1e3, 1e3]))


def test_expected_cost_floor(lorenz, lorenz_point):
    s = generate_series(lorenz, Operator.CUBE_SUM, lorenz_point, 10, 2)
    assert expected_cost_floor(s, 1.0) == 0
    n = add_noise(s, 0.3, np.random.default_rng(0))
    assert expected_cost_floor(n, 1.0) == pytest.approx(0.09)
    assert expected_cost_floor(n, 2.02) == pytest.approx(0.09 / 2.02**2)
    with pytest.raises(ValueError):
        expected_cost_floor(n, 0.5)
