import math

import numpy as np
import pytest

from app.core.channel import (ChannelRealization, CorrelationSpec, Topology, correlation_matrix,
                              draw_batch, draw_realization, elements_for_ratio, fixed_realization,
                              path_loss, rescale_to_ratio, typical_ratio)
from app.core.errors import DegenerateChannel, DegenerateGeometry
from app.core.numerics import psd_sqrt


def test_path_loss():
    assert path_loss(10.0, 2.0) == pytest.approx(1e-5)
    with pytest.raises(DegenerateGeometry):
        path_loss(0.0, 2.0)
    with pytest.raises(DegenerateGeometry):
        path_loss(10.0, 0.0)


def test_topology_distances(topology):
    assert topology.d_direct == pytest.approx(80.0)
    assert topology.d_ptx_ris == pytest.approx(math.hypot(75.0, 10.0))
    assert topology.d_ris_crx == pytest.approx(math.hypot(5.0, 10.0))
    assert topology.loss_direct == pytest.approx(1e-3 * 80.0 ** -3.0)


def test_topology_rejects_colocated_nodes():
    with pytest.raises(DegenerateGeometry):
        Topology(ptx=(0.0, 0.0), ris=(0.0, 0.0), crx=(1.0, 0.0),
                 exp_direct=3.0, exp_ptx_ris=2.0, exp_ris_crx=2.0)


def test_topology_dict_round_trip(topology):
    assert Topology.from_config(topology.to_dict()) == topology


def test_correlation_matrix_structure():
    R = correlation_matrix(CorrelationSpec(k_h=4, k_v=4, spacing_over_lambda=0.25))
    assert R.shape == (16, 16)
    np.testing.assert_allclose(np.diag(R), 1.0)
    np.testing.assert_allclose(R, R.T)
    assert np.linalg.eigvalsh(R).min() > -1e-10
    # Neighbours at 0.25 wavelengths: sinc(0.5) = 2 / pi
    assert R[0, 1] == pytest.approx(2.0 / math.pi)


@pytest.mark.parametrize("spacing", [0.1, 0.25, 0.5])
@pytest.mark.parametrize("k_h, k_v", [(4, 4), (8, 8), (16, 1)])
def test_correlation_matrix_is_psd(spacing, k_h, k_v):
    R = correlation_matrix(CorrelationSpec(k_h=k_h, k_v=k_v, spacing_over_lambda=spacing))
    assert np.linalg.eigvalsh(R).min() >= -1e-10
    S = psd_sqrt(R)
    np.testing.assert_allclose(S @ S.conj().T, R, atol=1e-8)


def test_half_wavelength_neighbours_uncorrelated():
    R = correlation_matrix(CorrelationSpec(k_h=2, k_v=1, spacing_over_lambda=0.5))
    assert R[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_correlation_spec_validation():
    with pytest.raises(ValueError):
        CorrelationSpec(k_h=0, k_v=4, spacing_over_lambda=0.5)
    with pytest.raises(ValueError):
        CorrelationSpec(k_h=2, k_v=2, spacing_over_lambda=0.0)


def test_realization_derived_quantities():
    f = np.array([1 + 1j, 2.0])
    h_r = np.array([1j, -1.0])
    real = ChannelRealization(h_d=0.5 + 0j, f=f, h_r=h_r, a_s=0.1)
    cascade = f * np.conj(h_r)
    assert real.h == pytest.approx(0.5 + 0.1 * cascade.sum())
    assert real.g == pytest.approx(math.sqrt(2) + 2.0)
    np.testing.assert_allclose(np.angle(cascade * np.exp(1j * real.align_phases)), 0.0, atol=1e-12)
    assert real.ratio == pytest.approx(abs(real.h) / real.g)


def test_realization_rejects_mismatched_vectors():
    with pytest.raises(ValueError):
        ChannelRealization(h_d=0j, f=np.ones(3), h_r=np.ones(2))


def test_zero_gain_ratio_is_degenerate():
    real = ChannelRealization(h_d=1 + 0j, f=np.zeros(2), h_r=np.ones(2))
    with pytest.raises(DegenerateChannel):
        real.ratio
    with pytest.raises(DegenerateChannel):
        rescale_to_ratio(real, 1.0)


def test_draw_batch_is_reproducible(topology):
    a = draw_batch(topology, 8, 50, None, 0j, np.random.default_rng(7))
    b = draw_batch(topology, 8, 50, None, 0j, np.random.default_rng(7))
    np.testing.assert_array_equal(a.h_d, b.h_d)
    np.testing.assert_array_equal(a.f, b.f)
    np.testing.assert_array_equal(a.h_r, b.h_r)
    assert a.f.shape == (50, 8) and a.h_d.shape == (50,)


def test_draw_batch_scales_with_path_loss(topology):
    batch = draw_batch(topology, 4, 100_000, None, 0j, np.random.default_rng(3))
    assert np.mean(np.abs(batch.h_d) ** 2) == pytest.approx(topology.loss_direct, rel=0.03)
    per_element = np.mean(np.abs(batch.f) ** 2, axis=0)
    np.testing.assert_allclose(per_element, topology.loss_ptx_ris, rtol=0.03)
    np.testing.assert_allclose(np.mean(np.abs(batch.h_r) ** 2, axis=0), topology.loss_ris_crx,
                               rtol=0.03)


def test_draw_batch_correlated_layout_must_match(topology):
    with pytest.raises(ValueError):
        draw_batch(topology, 8, 4, CorrelationSpec(2, 2, 0.5), 0j, np.random.default_rng(0))


def test_unit_fading_has_unit_small_scale(topology):
    batch = draw_batch(topology, 4, 3, None, 0j, np.random.default_rng(0), unit_fading=True)
    np.testing.assert_allclose(np.abs(batch.f), math.sqrt(topology.loss_ptx_ris))


def test_draw_realization_matches_batch_view(topology):
    real = draw_realization(topology, 4, None, 0j, np.random.default_rng(11))
    batch = draw_batch(topology, 4, 1, None, 0j, np.random.default_rng(11))
    assert real.h_d == batch.h_d[0]
    np.testing.assert_array_equal(real.f, batch.f[0])


@pytest.mark.parametrize("target", [0.0, 0.1, 1.5, 4.0])
def test_rescale_to_ratio(topology, target):
    real = draw_realization(topology, 16, None, 0.2 - 0.1j, np.random.default_rng(5))
    scaled = rescale_to_ratio(real, target)
    assert scaled.ratio == pytest.approx(target, abs=1e-12)
    assert scaled.g == pytest.approx(real.g)
    if target > 0:
        assert scaled.h / abs(scaled.h) == pytest.approx(real.h / abs(real.h))


def test_batch_rescale_matches_single(topology):
    batch = draw_batch(topology, 4, 10, None, 0.3j, np.random.default_rng(9)).rescale_to_ratio(0.7)
    np.testing.assert_allclose(np.abs(batch.h) / batch.g, 0.7)
    single = rescale_to_ratio(batch.realization(3), 0.7)
    assert single.h_d == pytest.approx(batch.h_d[3])


def test_fixed_realization():
    real = fixed_realization(16, 0.3)
    assert real.g == pytest.approx(1.0)
    assert real.h == pytest.approx(0.3)
    assert real.ratio == pytest.approx(0.3)


def test_typical_ratio_and_element_estimate(topology):
    assert typical_ratio(topology, 32) == pytest.approx(typical_ratio(topology, 16) / 2)
    assert elements_for_ratio(topology, typical_ratio(topology, 16)) == 16
    with pytest.raises(ValueError):
        elements_for_ratio(topology, 0.0)
