import math

import numpy as np
import pytest

from app.core.errors import NoSolution
from app.core.optimizer import (NODE_GAIN, RATIO_THRESHOLDS, BoundaryFunctions, RatioRegime,
                                beta_star_given_alpha, c2bar_limit, c4bar_limit,
                                constraint_violations, dmin_curve, dmin_given, grid_oracle,
                                magnitude_limit, select_alpha, solve, solve_batch,
                                transition_points, transition_points_fitted)

PI = math.pi


def test_thresholds():
    assert RATIO_THRESHOLDS[1] == pytest.approx(2.0 / (math.sqrt(6) - math.sqrt(2)))
    assert RATIO_THRESHOLDS[2] == pytest.approx(math.sqrt(2) + 1)


@pytest.mark.parametrize("ratio, case_id", [
    (0.0, 1), (0.3, 2), (1.0, 3), (1.5, 3), (RATIO_THRESHOLDS[1], 4), (2.3, 4),
    (RATIO_THRESHOLDS[2], 5), (20.0, 5),
])
def test_regime_classification(ratio, case_id):
    assert RatioRegime.classify(ratio).case_id == case_id


def test_negative_ratio_rejected():
    with pytest.raises(ValueError):
        solve(-1.0)


def test_standard_8psk_design():
    result = solve(0.0)
    assert result.case_id == 1
    assert result.alpha == pytest.approx(math.cos(PI / 8), abs=1e-6)
    assert result.beta == pytest.approx(-1j * math.sin(PI / 8), abs=1e-6)
    assert result.dmin == pytest.approx(2 * math.sin(PI / 8))


@pytest.mark.parametrize("ratio, alpha, beta", [
    (0.1, 0.91, -0.42j),
    (1.5, 0.18, 0.61 - 0.61j),
])
def test_reference_designs(ratio, alpha, beta):
    result = solve(ratio)
    assert result.alpha == pytest.approx(alpha, abs=0.01)
    assert result.beta.real == pytest.approx(beta.real, abs=0.01)
    assert result.beta.imag == pytest.approx(beta.imag, abs=0.01)


def test_phase_range_design():
    result = solve(2.3)
    assert result.case_id == 4
    assert result.alpha == 0.0
    assert abs(result.beta) == pytest.approx(1.0)
    lo, hi = result.beta_phase_range
    assert lo / PI == pytest.approx(-0.38, abs=0.02)
    assert hi / PI == pytest.approx(-0.12, abs=0.02)
    assert lo < np.angle(result.beta) < hi


def test_any_phase_at_large_ratio():
    result = solve(4.0)
    assert result.case_id == 5
    assert result.alpha == 0.0
    assert abs(result.beta) == pytest.approx(1.0)
    assert result.beta_phase_range == (-PI, 0.0)
    assert result.dmin == pytest.approx(2.0)


def test_boundary_identity():
    theta = np.linspace(-PI, 0.0, 101)
    for xi in (0.0, 0.3, 1.7, 5.0):
        bounds = BoundaryFunctions(xi)
        np.testing.assert_allclose(bounds.beta1(theta) * bounds.beta2(theta), xi ** 2,
                                   rtol=1e-12, atol=1e-15)


def test_node_gain():
    bounds = BoundaryFunctions(2.0)
    assert bounds.beta1(-PI / 4) == pytest.approx(2.0 * NODE_GAIN)
    assert bounds.beta3(-PI / 4) == pytest.approx(2.0 * NODE_GAIN)


def test_c4bar_limit_matches_modulus():
    theta = np.linspace(-PI, 0.0, 41)
    alpha = 0.6
    mag = c4bar_limit(theta, alpha)
    beta = mag * np.exp(1j * theta)
    worst = np.maximum(np.abs(alpha + beta), np.abs(alpha - beta))
    np.testing.assert_allclose(worst, 1.0, atol=1e-12)


@pytest.mark.parametrize("theta, xi, expected", [
    (-PI / 2, 1.0, 1.0),
    (-PI / 4, 1.0, 1 / math.sqrt(2)),
    (-3 * PI / 4, 2.0, math.sqrt(2)),
])
def test_c2bar_limit_values(theta, xi, expected):
    assert float(c2bar_limit(theta, xi)) == pytest.approx(expected, abs=1e-12)


def test_c2bar_limit_sits_on_an_angle_constraint():
    xi = 1.3
    upper_half = np.linspace(-PI / 2 + 0.01, -0.01, 25)
    beta = c2bar_limit(upper_half, xi) * np.exp(1j * upper_half)
    np.testing.assert_allclose(np.angle(xi - beta), PI / 4, atol=1e-12)
    lower_half = np.linspace(-PI + 0.01, -PI / 2 - 0.01, 25)
    beta = c2bar_limit(lower_half, xi) * np.exp(1j * lower_half)
    np.testing.assert_allclose(np.angle(xi + beta), -PI / 4, atol=1e-12)


def test_solver_output_within_magnitude_limit():
    for r in np.linspace(0.0, 5.0, 101):
        result = solve(float(r))
        limit = magnitude_limit(np.angle(result.beta), result.alpha, float(r))
        assert abs(result.beta) <= limit + 1e-9


@pytest.mark.parametrize("ratio, expected", [
    (0.0, (1 / math.sqrt(2), math.cos(PI / 8))),
    (1.0, ((math.sqrt(3) - 1) / 2, 1 / math.sqrt(2))),
])
def test_transition_points(ratio, expected):
    assert transition_points(ratio) == pytest.approx(expected, abs=1e-10)


def test_transition_points_vanish_beyond_threshold():
    with pytest.raises(NoSolution):
        transition_points(2.5)


@pytest.mark.parametrize("ratio", np.linspace(0.0, 1.6, 9))
def test_fitted_transition_points(ratio):
    exact = transition_points(ratio)
    assert transition_points_fitted(ratio) == pytest.approx(exact, abs=0.01)


def test_solver_output_feasible_on_dense_grid():
    for r in np.linspace(0.0, 5.0, 251):
        result = solve(float(r))
        assert constraint_violations(result.alpha, result.beta, float(r)) == ()
        assert result.dmin == pytest.approx(dmin_given(result.alpha, result.beta, float(r)))


@pytest.mark.parametrize("threshold", RATIO_THRESHOLDS)
def test_dmin_continuous_at_case_boundaries(threshold):
    assert solve(threshold - 1e-9).dmin == pytest.approx(solve(threshold).dmin, abs=1e-6)


def test_dmin_grows_with_ratio():
    dmins = [solve(float(r)).dmin for r in np.linspace(0.0, 3.0, 61)]
    assert np.all(np.diff(dmins) >= -1e-12)


def test_dmin_curve_shape_without_direct_link():
    alpha1, alpha2 = transition_points(0.0)
    rising = dmin_curve(0.0, np.linspace(0.0, alpha1, 50))
    falling = dmin_curve(0.0, np.linspace(alpha2, 1.0, 50))
    assert np.all(np.diff(rising) >= -1e-12)
    assert np.all(np.diff(falling) <= 1e-12)


def test_beta_star_rejects_bad_alpha():
    with pytest.raises(ValueError):
        beta_star_given_alpha(1.2, 0.5)


@pytest.mark.parametrize("ratio", [0.05, 0.5, 0.9, 1.2, 1.5, 1.9])
def test_alpha_selection_matches_cases(ratio):
    assert select_alpha(ratio) == pytest.approx(solve(ratio).alpha, abs=1e-9)


@pytest.mark.parametrize("ratio", [0.0, 0.5, 1.5, 2.3, 3.0])
def test_piecewise_distance_matches_direct_evaluation(ratio):
    result = solve(ratio)
    bounds = BoundaryFunctions(ratio + result.alpha)
    assert 1 <= bounds.region(result.beta) <= 5
    assert bounds.piecewise_dmin(result.beta) == pytest.approx(result.dmin, rel=1e-9)


@pytest.mark.parametrize("ratio", [0.0, 0.4, 1.5, 2.2])
def test_closed_form_not_beaten_by_grid(ratio):
    oracle = grid_oracle(ratio, 0.02, 0.02, 0.02)
    assert solve(ratio).dmin >= 0.98 * oracle.dmin
    assert constraint_violations(oracle.alpha, oracle.beta, ratio, tol=1e-9) == ()


def test_grid_oracle_rejects_bad_steps():
    with pytest.raises(ValueError):
        grid_oracle(0.5, 0.0, 0.1, 0.1)


def test_solver_result_dict():
    data = solve(1.5).to_dict()
    assert data["case"] == 3
    assert data["beta_abs"] == pytest.approx(abs(solve(1.5).beta))
    assert data["phase_range"] is None


def test_batch_solve_matches_scalar_solve():
    ratios = np.concatenate([np.linspace(0.0, 5.0, 201), RATIO_THRESHOLDS, [0.37, 1.93, 2.3]])
    alpha, beta = solve_batch(ratios)
    for r, a, b in zip(ratios, alpha, beta):
        result = solve(float(r))
        assert a == pytest.approx(result.alpha, abs=1e-9)
        assert b == pytest.approx(result.beta, abs=1e-9)


def test_batch_solve_rejects_negative_ratio():
    with pytest.raises(ValueError):
        solve_batch(np.array([0.5, -0.1]))
