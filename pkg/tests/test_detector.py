import dataclasses

import numpy as np
import pytest

from app.core.channel import fixed_realization
from app.core.detector import (ErrorCounts, accumulate, conventional_hypotheses,
                               detect_composite, detect_conventional, nearest, tally)
from app.core.modulation import (COMPOSITE_C, COMPOSITE_S, C_POINTS, S_POINTS, ModulationDesign,
                                 build_composite, build_phase_matrix)
from app.core.optimizer import solve


def test_nearest_picks_closest():
    idx, tie = nearest(np.array([0.9, -1.1j]), np.array([[1, -1, 1j, -1j]] * 2))
    np.testing.assert_array_equal(idx, [0, 3])
    assert not tie.any()


def test_nearest_ties_go_to_lowest_index():
    idx, tie = nearest(np.array([0j]), np.array([[1, -1]]))
    assert idx[0] == 0
    assert tie[0]


def test_error_counts_enforce_identity():
    with pytest.raises(ValueError):
        ErrorCounts(trials=1, bit_errors_s=1, bit_errors_c=1, bit_errors_x=1)


def test_error_counts_add():
    total = ErrorCounts(2, 1, 1, 2) + ErrorCounts(3, 2, 0, 2)
    assert total == ErrorCounts(5, 3, 1, 4)
    assert (total.bits_s, total.bits_c, total.bits_x) == (10, 5, 15)


def test_tally_uses_gray_labels():
    # 00 -> 11 costs two bits, 00 -> 01 one; c flips cost one each
    counts = tally(np.array([0, 0, 1]), np.array([0, 1, 1]),
                   np.array([2, 1, 1]), np.array([1, 1, 0]))
    assert counts == ErrorCounts(trials=3, bit_errors_s=3, bit_errors_c=2, bit_errors_x=5)


@pytest.mark.parametrize("ratio", [0.0, 0.5, 1.5, 3.0])
def test_composite_detector_noiseless(ratio):
    best = solve(ratio)
    constellation = build_composite(fixed_realization(4, ratio),
                                    ModulationDesign.proposed(best.alpha, best.beta), power=2.0)
    for slot in range(8):
        y = constellation.gain * constellation.points[slot]
        decision = detect_composite(y, constellation)
        assert decision.x_index == slot
        assert (decision.s_index, decision.c_index) == (COMPOSITE_S[slot], COMPOSITE_C[slot])
        assert decision.s_hat == pytest.approx(S_POINTS[COMPOSITE_S[slot]])
        assert not decision.tie


@pytest.mark.parametrize("scale", [1e-3, 7.5, 1e4])
def test_composite_detector_ignores_common_scale(scale, rng):
    best = solve(0.5)
    constellation = build_composite(fixed_realization(4, 0.5),
                                    ModulationDesign.proposed(best.alpha, best.beta), power=2.0)
    scaled = dataclasses.replace(constellation, gain=scale * constellation.gain)
    slots = rng.integers(0, 8, 200)
    noise = 0.3 * (rng.standard_normal(200) + 1j * rng.standard_normal(200))
    for slot, z in zip(slots, noise):
        y = constellation.gain * constellation.points[slot] + z
        assert detect_composite(scale * y, scaled) == detect_composite(y, constellation)


def test_conventional_detector_with_direct_link():
    real = fixed_realization(4, 0.5)
    phi = build_phase_matrix(real)
    w = np.sum(np.conj(real.h_r) * phi * real.f)
    hyps = conventional_hypotheses(real.h, w, 1.0)
    for slot in range(8):
        decision = detect_conventional(hyps[slot] + 0.05, real, phi, 1.0)
        assert (decision.s_index, decision.c_index) == (COMPOSITE_S[slot], COMPOSITE_C[slot])
        assert decision.x_index is None


def test_conventional_detector_ambiguous_without_direct_link():
    real = fixed_realization(4, 0.0)
    phi = build_phase_matrix(real)
    # (s0, +1) and (s2, -1) give the same received point
    y = S_POINTS[0] * C_POINTS[0]
    decision = detect_conventional(y, real, phi, 1.0)
    assert decision.tie
    assert (decision.s_index, decision.c_index) == (0, 0)


def test_accumulate_matches_tally():
    best = solve(0.0)
    constellation = build_composite(fixed_realization(1, 0.0),
                                    ModulationDesign.proposed(best.alpha, best.beta))
    decision = detect_composite(constellation.points[7], constellation)
    counts = accumulate(ErrorCounts(), (0, 0), decision)
    assert counts == tally(np.array([0]), np.array([0]), np.array([3]), np.array([1]))
