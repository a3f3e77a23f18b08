import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tunnel_chrono import numerics
from tunnel_chrono.errors import (
    BracketError,
    DegenerateFitError,
    EvaluationError,
    NonConvergenceError,
    ToleranceError,
    ValidationError,
)
from tunnel_chrono.junction import JunctionModel, _iv_model, simmons_j, synth_iv
from tunnel_chrono.partialwave3d import SphericalWell, phase_shift
from tunnel_chrono.constants import HBAR2_OVER_2M

finite = st.floats(-10, 10, allow_nan=False)


# --- derivative ---------------------------------------------------------------


def test_derivative_of_square():
    assert numerics.derivative(lambda x: x * x, 3.0) == pytest.approx(6.0, rel=1e-12)


def test_derivative_of_constant_is_zero():
    assert numerics.derivative(lambda x: 4.2, -7.0) == 0.0


def test_derivative_of_sine_at_origin():
    assert numerics.derivative(math.sin, 0.0) == pytest.approx(1.0, rel=1e-12)


def test_derivative_relative_accuracy_on_smooth_function():
    assert numerics.derivative(math.exp, 1.3) == pytest.approx(math.exp(1.3), rel=1e-7)


@given(finite, finite, finite, finite, st.floats(-5, 5, allow_nan=False))
def test_derivative_exact_for_cubics(a, b, c, d, x):
    f = lambda u: a * u**3 + b * u**2 + c * u + d
    exact = 3 * a * x**2 + 2 * b * x + c
    # rounding floor: function magnitude times eps over the step
    floor = 1e-9 * (abs(a) * 125 + abs(b) * 25 + abs(c) * 5 + abs(d) + 1)
    assert abs(numerics.derivative(f, x) - exact) <= max(1e-10 * abs(exact), floor)


def test_derivative_rejects_non_finite_values():
    with pytest.raises(EvaluationError):
        numerics.derivative(lambda x: math.inf, 1.0)


def test_derivative_rejects_non_positive_step():
    with pytest.raises(ValidationError):
        numerics.derivative(math.sin, 0.0, 0.0)


# --- integrate ----------------------------------------------------------------


def test_integral_of_square():
    assert numerics.integrate(lambda x: x * x, 0.0, 1.0) == pytest.approx(1 / 3, abs=1e-10)


def test_integral_of_sine_over_half_period():
    assert numerics.integrate(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-10)


def test_integral_of_unity_is_length():
    assert numerics.integrate(lambda x: 1.0, 0.0, 17.5) == pytest.approx(17.5, abs=1e-12)


@settings(max_examples=50)
@given(
    st.floats(-3, 3),
    st.floats(0.1, 3),
    st.floats(0.1, 3),
    st.floats(0.2, 5),
)
def test_integral_is_additive(a, span1, span2, freq):
    b, c = a + span1, a + span1 + span2
    f = lambda x: math.cos(freq * x) * math.exp(-0.1 * x * x)
    tol = 1e-10
    whole = numerics.integrate(f, a, c, tol)
    parts = numerics.integrate(f, a, b, tol) + numerics.integrate(f, b, c, tol)
    assert abs(whole - parts) < 2 * tol


def test_integrate_tolerance_error_carries_estimate():
    with pytest.raises(ToleranceError) as info:
        numerics.integrate(lambda x: x**-0.5 if x > 0 else 0.0, 0.0, 1.0, tol=1e-14, max_depth=6)
    assert info.value.estimate == pytest.approx(2.0, rel=0.2)


def test_integrate_rejects_empty_interval():
    with pytest.raises(ValidationError):
        numerics.integrate(math.sin, 1.0, 1.0)


def test_integrate_rejects_non_finite_integrand():
    with pytest.raises(EvaluationError):
        numerics.integrate(lambda x: math.nan, 0.0, 1.0)


# --- find_root ----------------------------------------------------------------


def test_root_of_sine_is_pi():
    assert numerics.find_root(math.sin, 3.0, 3.3) == pytest.approx(math.pi, abs=1e-12)


def test_root_of_quadratic_is_sqrt2():
    assert numerics.find_root(lambda x: x * x - 2, 1.0, 2.0) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_root_without_sign_change_is_rejected():
    with pytest.raises(BracketError):
        numerics.find_root(lambda x: x * x + 1, -1.0, 1.0)


@given(st.floats(-50, 50), st.floats(0.01, 20), st.floats(0.0, 1.0))
def test_root_stays_inside_bracket(lo, width, frac):
    hi = lo + width
    target = lo + frac * width
    root = numerics.find_root(lambda x: math.atan(x - target), lo, hi)
    assert lo <= root <= hi
    assert root == pytest.approx(target, abs=1e-9 * max(1, abs(target)))


def test_level_equation_root_satisfies_equation():
    # s-wave box level: k R + delta_0(k) = n pi
    well, R = SphericalWell(-2.0, 5.0), 200.0

    def level(k):
        return k * R + phase_shift(well, 0, HBAR2_OVER_2M * k * k) - 60 * math.pi

    lo = 60 * math.pi / R - 0.05
    hi = 60 * math.pi / R + 0.05
    k = numerics.find_root(level, lo, hi)
    assert abs(level(k)) < 1e-9


# --- fit_curve ----------------------------------------------------------------


def _poly(params, x):
    a, b, c = params
    return a * np.exp(-b * x) + c


def _poly_data(truth, n=20):
    xs = np.linspace(0, 4, n)
    return [(x, y, 1.0) for x, y in zip(xs, _poly(truth, xs))]


def test_fit_fixed_point():
    truth = [2.0, 0.7, 0.3]
    res = numerics.fit_curve(_poly, truth, _poly_data(truth))
    assert res.converged
    np.testing.assert_allclose(res.params, truth, rtol=1e-12)
    assert res.residual_norm == pytest.approx(0.0, abs=1e-14)


def test_fit_linear_model():
    res = numerics.fit_curve(lambda p, x: p[0] * x, [0.5], [(1, 2, 1), (2, 4, 1)])
    assert res.params[0] == pytest.approx(2.0, rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-0.2, 0.2), min_size=3, max_size=3))
def test_noiseless_fit_from_nearby_start(offsets):
    truth = np.array([2.0, 0.7, 0.3])
    data = _poly_data(truth)
    start = truth * (1 + np.array(offsets))
    res = numerics.fit_curve(_poly, start, data)
    data_norm = np.linalg.norm([y for _, y, _ in data])
    assert res.residual_norm < 1e-12 * data_norm


def test_fit_covariance_is_symmetric_positive_semidefinite():
    rng = np.random.default_rng(5)
    truth = [2.0, 0.7, 0.3]
    data = [(x, y + 0.01 * rng.standard_normal(), 1.0) for x, y, _ in _poly_data(truth, 40)]
    res = numerics.fit_curve(_poly, [1.5, 1.0, 0.0], data)
    assert res.residual_norm >= 0
    assert np.all(np.isfinite(res.params))
    np.testing.assert_allclose(res.covariance, res.covariance.T, rtol=1e-12, atol=1e-18)
    assert np.linalg.eigvalsh(res.covariance).min() >= -1e-15
    assert not res.near_singular


def test_fit_recovers_simmons_parameters_from_noisy_data():
    model = JunctionModel(20.8, 1.799)
    data = synth_iv(model, np.linspace(0.02, 1.0, 50), 0.01, seed=11)
    rows = [(p.voltage, p.current_density, 1 / abs(p.current_density)) for p in data.points]
    res = numerics.fit_curve(_iv_model, [17.0, 1.5], rows)
    s, phi0 = res.params
    assert s == pytest.approx(20.8, rel=0.02)
    assert phi0 == pytest.approx(1.799, rel=0.02)


def test_fit_zero_jacobian_column_is_degenerate():
    with pytest.raises(DegenerateFitError):
        numerics.fit_curve(lambda p, x: p[0] * x + 0 * p[1], [1.0, 1.0], [(1, 1, 1), (2, 3, 1), (3, 2, 1)])


def test_fit_iteration_cap_reports_best_result():
    truth = [2.0, 0.7, 0.3]
    with pytest.raises(NonConvergenceError) as info:
        numerics.fit_curve(_poly, [0.1, 3.0, -2.0], _poly_data(truth), max_iter=2)
    assert info.value.result.iterations == 2
    assert np.all(np.isfinite(info.value.result.params))


def test_fit_needs_enough_points():
    with pytest.raises(ValidationError):
        numerics.fit_curve(_poly, [1, 1, 1], [(0, 1, 1), (1, 2, 1)])


def test_simmons_helper_matches_public_function():
    assert _iv_model([20.8, 1.8], np.array([0.5]))[0] == pytest.approx(simmons_j(0.5, 20.8, 1.8), rel=1e-14)
