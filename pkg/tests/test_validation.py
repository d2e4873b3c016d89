import pytest

from app.core import validation
from app.core.optimizer import RATIO_THRESHOLDS


def test_table_goldens_pass():
    passed, detail = validation.check_table_goldens()
    assert passed, detail


def test_shifted_threshold_breaks_continuity():
    shifted = (RATIO_THRESHOLDS[0] + 0.05,) + RATIO_THRESHOLDS[1:]
    passed, _ = validation.check_case_continuity(shifted)
    assert not passed
    assert validation.check_case_continuity()[0]


@pytest.mark.parametrize("check", [
    validation.check_boundary_identity,
    validation.check_alpha_selection,
    validation.check_transition_fit,
    validation.check_phase_pdf_normalization,
    validation.check_dmin_monotonicity,
    validation.check_counting_identity,
])
def test_quick_checks_pass(check):
    passed, detail = check()
    assert passed, detail


def test_crossing_snr_interpolates():
    curve = [(0.0, 1e-1), (2.0, 1e-2), (4.0, 1e-3)]
    assert validation.crossing_snr(curve, 1e-2) == pytest.approx(2.0)
    assert validation.crossing_snr(curve, 10 ** -1.5) == pytest.approx(1.0)
    assert validation.crossing_snr(curve, 1e-5) is None


def test_unknown_fault_rejected():
    with pytest.raises(ValueError):
        validation.run_validation(fault="gremlins")


@pytest.mark.slow
@pytest.mark.parametrize("check", [
    validation.check_oracle_equivalence,
    validation.check_ambiguity_plateau,
    validation.check_exact_8psk_monte_carlo,
    validation.check_ls_mse,
    validation.check_determinism,
])
def test_core_acceptance(check):
    passed, detail = check()
    assert passed, detail


@pytest.mark.slow
@pytest.mark.parametrize("check", [
    validation.check_snr_gain,
    validation.check_large_ratio_equivalence,
    validation.check_asymptotic_limit,
    validation.check_estimation_trend,
])
def test_fading_acceptance(check):
    passed, detail = check()
    assert passed, detail
