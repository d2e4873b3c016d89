import math

import pytest

from app.core.channel import CorrelationSpec
from app.core.detector import ErrorCounts
from app.core.engine import (Z95, BerEstimate, EstimatedCsi, FixedRatio, NaturalK, SweepSpec,
                             block_stream, run_point, run_sweep, snr_to_power)
from app.core.errors import TrialError
from app.core.modulation import Scheme
from app.core.numerics import db_to_linear, dbm_to_watts
from app.core.theory import ber_8psk_exact


@pytest.mark.parametrize("overrides", [
    {"trials_per_point": 0},
    {"snr_points": ()},
    {"scheme": "hybrid"},
    {"channel_mode": "fixed", "ratio_mode": NaturalK()},
    {"csi": EstimatedCsi(10)},
    {"correlation": CorrelationSpec(2, 2, 0.5)},
    {"alpha": 1.5},
])
def test_spec_validation(make_spec, overrides):
    with pytest.raises(ValueError):
        make_spec(**overrides)


def test_fixed_ratio_must_be_nonnegative():
    with pytest.raises(ValueError):
        FixedRatio(-0.1)


def test_spec_dict_round_trip(make_spec):
    spec = make_spec(csi=EstimatedCsi(18), correlation=CorrelationSpec(4, 2, 0.25),
                     structural=0.2 - 0.1j, alpha=0.3)
    assert SweepSpec.from_dict(spec.to_dict()) == spec


def test_ber_estimate():
    est = BerEstimate(errors=50, bits=1000)
    assert est.ber == pytest.approx(0.05)
    assert est.ci95 == pytest.approx(Z95 * math.sqrt(0.05 * 0.95 / 1000))
    assert Z95 == pytest.approx(1.96, abs=1e-3)


def test_snr_to_power(topology):
    sigma2 = 1e-13
    power = snr_to_power(10.0, topology, sigma2)
    assert power * topology.loss_ptx_ris * topology.loss_ris_crx / sigma2 == pytest.approx(10.0)


def test_block_streams_are_independent_of_call_order():
    a = block_stream(42, 1, 3).standard_normal(4)
    block_stream(42, 0, 0).standard_normal(100)
    b = block_stream(42, 1, 3).standard_normal(4)
    assert (a == b).all()


def test_rows_keep_counting_identity(make_spec):
    result = run_sweep(make_spec(), workers=1)
    assert len(result.rows) == 4
    for row in result.rows:
        assert row.counts.bit_errors_x == row.counts.bit_errors_s + row.counts.bit_errors_c
        assert row.trials == 600
    assert [r.scheme for r in result.rows] == ["conventional"] * 2 + ["proposed"] * 2


def test_disjoint_ranges_add_up(make_spec):
    spec = make_spec(block_size=128)
    left = run_point(spec, 1, range(0, 100))
    right = run_point(spec, 1, range(100, 300))
    assert left + right == run_point(spec, 1, range(0, 300))
    conv = run_point(spec, 1, range(0, 300), scheme=Scheme.CONVENTIONAL)
    assert conv.trials == 300


def test_worker_count_does_not_change_results(make_spec):
    spec = make_spec(trials_per_point=1000)
    one = run_sweep(spec, workers=1)
    two = run_sweep(spec, workers=2)
    assert [(r.counts, r.reference) for r in one.rows] == [(r.counts, r.reference) for r in two.rows]


def test_same_seed_same_counts_different_seed_differs(make_spec):
    a = run_sweep(make_spec(), workers=1)
    b = run_sweep(make_spec(), workers=1)
    c = run_sweep(make_spec(seed=43), workers=1)
    assert [r.counts for r in a.rows] == [r.counts for r in b.rows]
    assert [r.counts for r in a.rows] != [r.counts for r in c.rows]


def test_conventional_ambiguity_plateau(make_spec):
    spec = make_spec(trials_per_point=4000, snr_points=(30.0,), ratio_mode=FixedRatio(0.0),
                     scheme="conventional", channel_mode="fixed")
    row = run_sweep(spec, workers=1).rows[0]
    assert row.ber_x.ber == pytest.approx(0.5, abs=0.03)


def test_fixed_channel_matches_exact_8psk(make_spec):
    trials = 20_000
    spec = make_spec(trials_per_point=trials, snr_points=(10.0,), ratio_mode=FixedRatio(0.0),
                     scheme="proposed", channel_mode="fixed", block_size=4096)
    row = run_sweep(spec, workers=1).rows[0]
    exact = ber_8psk_exact(float(db_to_linear(10.0)))
    sigma = math.sqrt(exact.p_x * (1 - exact.p_x) / trials)
    assert abs(row.ber_x.ber - exact.p_x) <= 4 * sigma


def test_proposed_beats_conventional_at_small_ratio(make_spec):
    spec = make_spec(trials_per_point=4000, snr_points=(10.0,), ratio_mode=FixedRatio(0.1))
    result = run_sweep(spec, workers=1)
    assert result.row("proposed", 10.0).ber_x.ber < result.row("conventional", 10.0).ber_x.ber


def test_natural_k_reports_mean_ratio(make_spec):
    result = run_sweep(make_spec(ratio_mode=NaturalK(), structural=0.2954 - 0.0524j), workers=1)
    ratios = {r.ratio for r in result.rows}
    assert all(r > 0 for r in ratios)
    assert result.row("proposed", 0.0).ratio == result.row("conventional", 0.0).ratio


def test_estimated_csi_and_correlation_run(make_spec):
    spec = make_spec(csi=EstimatedCsi(18), correlation=CorrelationSpec(4, 2, 0.25))
    for row in run_sweep(spec, workers=1).rows:
        assert row.counts.trials == 600
        assert 0.0 <= row.ber_x.ber <= 1.0


def test_alpha_override(make_spec):
    result = run_sweep(make_spec(alpha=0.3, scheme="proposed"), workers=1)
    assert all(r.scheme == "proposed" for r in result.rows)


def test_alpha_override_without_design_fails_with_trial_error(make_spec):
    with pytest.raises(TrialError) as info:
        run_sweep(make_spec(alpha=0.3, ratio_mode=FixedRatio(3.0), scheme="proposed"), workers=1)
    assert info.value.snr_index == 0


def test_reference_values_present(make_spec, topology):
    row = run_sweep(make_spec(), workers=1).row("conventional", 10.0)
    assert set(row.reference) == {"avg_q_direct", "avg_q_reflect", "tx_power_dbm"}
    assert 0.0 <= row.reference["avg_q_reflect"] <= 0.5
    power = snr_to_power(10.0, topology, dbm_to_watts(-100.0))
    assert row.reference["tx_power_dbm"] == pytest.approx(10.0 * math.log10(power) + 30.0)


def test_fixed_channel_has_no_transmit_power(make_spec):
    spec = make_spec(channel_mode="fixed", scheme="proposed")
    row = run_sweep(spec, workers=1).rows[0]
    assert "tx_power_dbm" not in row.reference


def test_missing_row_lookup(make_spec):
    result = run_sweep(make_spec(scheme="proposed"), workers=1)
    with pytest.raises(KeyError):
        result.row("conventional", 0.0)


def test_error_counts_default_empty():
    assert ErrorCounts().bits_x == 0
