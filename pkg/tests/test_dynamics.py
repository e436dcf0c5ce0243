import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from microinit.dynamics import (
    LorenzModel,
    MackeyGlassModel,
    TrajectoryOverflow,
    iterate,
    sample_attractor,
    step,
    trajectory,
)


def lorenz_rhs(t, s, sigma=10.0, rho=28.0, beta=8.0 / 3.0):
    x, y, z = s
    return [sigma * (y - x), x * (rho - z) - y, x * y - beta * z]


def test_lorenz_origin_is_fixed(lorenz):
    assert np.array_equal(step(lorenz, np.zeros(3)), np.zeros(3))


def rk4_reference(x, dt):
    f = lambda s: np.array(lorenz_rhs(0.0, s))
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def test_lorenz_step_is_classic_rk4(lorenz):
    x = np.array([1.0, 1.0, 1.0])
    assert np.max(np.abs(step(lorenz, x) - rk4_reference(x, 0.01))) <= 1e-13


def test_lorenz_step_against_adaptive_reference(lorenz):
    # frozen from DOP853 at rtol=atol=1e-13: the RK4 local truncation error at (1,1,1) is 2.23e-6
    x = np.array([1.0, 1.0, 1.0])
    ref = solve_ivp(lorenz_rhs, (0, 0.01), x, method="DOP853", rtol=1e-13, atol=1e-13).y[:, -1]
    err = np.max(np.abs(step(lorenz, x) - ref))
    assert err == pytest.approx(2.2273e-6, rel=1e-3)


def test_rk4_error_scales_with_fifth_power(lorenz_point):
    errs = []
    for dt in (0.02, 0.01):
        ref = solve_ivp(lorenz_rhs, (0, dt), lorenz_point, method="DOP853",
                        rtol=1e-13, atol=1e-13).y[:, -1]
        errs.append(np.linalg.norm(step(LorenzModel(dt=dt), lorenz_point) - ref))
    # local error is O(dt^5): halving dt cuts it by ~32, at least the 16x of a global 4th order
    assert errs[0] / errs[1] > 16


def test_mackey_glass_unit_fixed_point(mackey_glass):
    ones = np.ones(mackey_glass.dim)
    assert np.array_equal(step(mackey_glass, ones), ones)
    assert np.array_equal(iterate(mackey_glass, ones, mackey_glass.dim), ones)
    assert np.array_equal(iterate(mackey_glass, ones, 10_000), ones)


def test_lorenz_equilibrium_long_run(lorenz):
    assert np.array_equal(iterate(lorenz, np.zeros(3), 10_000), np.zeros(3))


def test_mackey_glass_dt_is_exact():
    m = MackeyGlassModel(t_d=17.0, n_x=17)
    assert m.dt == 1.0 and m.dim == 17


def _sequential_window_update(model, x):
    """Direct Euler update of the whole window, newest sample built on the previous one."""
    x = np.array(x, dtype=float)
    n = x.size
    new = np.empty(n)
    prev = x[-1]
    for i in range(n):
        prev = prev + model.dt * model.rate(prev, x[i])
        new[i] = prev
    return new


def test_mackey_glass_delay_line_matches_window_update(mackey_glass, mg_point):
    # n_x single-sample steps equal one sequential update of all n_x components
    got = iterate(mackey_glass, mg_point, mackey_glass.dim)
    assert np.array_equal(got, _sequential_window_update(mackey_glass, mg_point))


def test_mackey_glass_state_is_oldest_first(mackey_glass, mg_point):
    nxt = step(mackey_glass, mg_point)
    assert np.array_equal(nxt[:-1], mg_point[1:])
    expected = mg_point[-1] + mackey_glass.dt * mackey_glass.rate(mg_point[-1], mg_point[0])
    assert nxt[-1] == expected


def test_iterate_zero_is_copy(lorenz_point, lorenz):
    out = iterate(lorenz, lorenz_point, 0)
    assert np.array_equal(out, lorenz_point) and out is not lorenz_point


def test_iterate_is_composition_of_steps(lorenz, lorenz_point):
    x = lorenz_point
    for _ in range(5):
        x = step(lorenz, x)
    assert np.array_equal(iterate(lorenz, lorenz_point, 5), x)


@given(a=st.integers(0, 300), b=st.integers(0, 300))
def test_iterate_composition_law_lorenz(a, b):
    model = LorenzModel()
    x = np.array([1.5, -2.0, 20.0])
    assert np.array_equal(iterate(model, x, a + b), iterate(model, iterate(model, x, a), b))


@given(a=st.integers(0, 120), b=st.integers(0, 120))
def test_iterate_composition_law_mackey_glass(a, b):
    model = MackeyGlassModel()
    x = np.linspace(0.6, 1.2, model.dim)
    assert np.array_equal(iterate(model, x, a + b), iterate(model, iterate(model, x, a), b))


def test_trajectory_stride_arithmetic(lorenz, lorenz_point):
    tr = trajectory(lorenz, lorenz_point, 3, 2)
    assert tr.shape == (3, 3)
    assert np.array_equal(tr[0], lorenz_point)
    assert np.array_equal(tr[2], iterate(lorenz, lorenz_point, 4))
    assert np.array_equal(trajectory(lorenz, lorenz_point, 1, 7), lorenz_point[None])


def test_batch_run_matches_single_runs(lorenz):
    rng = np.random.default_rng(0)
    xs = np.stack([sample_attractor(lorenz, rng) for _ in range(4)])
    batch = lorenz.run(xs, 20, 3)
    for b in range(4):
        assert np.array_equal(batch[b], trajectory(lorenz, xs[b], 20, 3))


def test_lorenz_attractor_is_bounded(lorenz, lorenz_point):
    tr = trajectory(lorenz, lorenz_point, 15_000)
    assert np.all(np.isfinite(tr))
    assert np.max(np.abs(tr[:, 2])) < 60


def test_sample_attractor_is_seeded(lorenz):
    a = sample_attractor(lorenz, np.random.default_rng(5))
    b = sample_attractor(lorenz, np.random.default_rng(5))
    assert np.array_equal(a, b)
    orbit = trajectory(lorenz, a, 1000)
    assert np.max(np.abs(orbit[:, 2])) < 60


def test_mackey_glass_attractor_is_positive(mackey_glass):
    x = sample_attractor(mackey_glass, np.random.default_rng(3))
    assert np.all((x > 0) & (x < 2))


def test_overflow_reports_step():
    model = LorenzModel(dt=1.0)
    with pytest.raises(TrajectoryOverflow) as info:
        iterate(model, np.array([1e3, 1e3, 1e3]), 50)
    assert info.value.step_index >= 1


def test_run_rejects_bad_input(lorenz):
    with pytest.raises(ValueError):
        lorenz.run(np.zeros(2), 2)
    with pytest.raises(ValueError):
        lorenz.run(np.array([np.nan, 0, 0]), 2)
    with pytest.raises(ValueError):
        lorenz.run(np.zeros(3), 0)
    with pytest.raises(ValueError):
        iterate(lorenz, np.zeros(3), -1)


def test_model_validation():
    with pytest.raises(ValueError):
        LorenzModel(dt=0)
    with pytest.raises(ValueError):
        MackeyGlassModel(t_d=0)
    with pytest.raises(ValueError):
        MackeyGlassModel(n_x=0)
