import numpy as np
import pytest
from pydantic import ValidationError

from pas_npn_lab.channel.models import FiberSpan, LinkSpec
from pas_npn_lab.core.errors import MetricsError, SeriesTooShortError
from pas_npn_lab.metrics.kernel import CoefficientTable, KernelCoefficients, compute_coefficients
from pas_npn_lab.metrics.npn import (
    NpnSpec,
    PhaseSeries,
    effective_length,
    intensity,
    moving_average,
    nominal_phase_rotation,
    normalize_power,
    npn_metric,
    npn_phase_series,
    npn_variance,
)
from pas_npn_lab.pas.mapping import MapKind, SignSource, map_blocks
from pas_npn_lab.shaping.emulation import draw_amplitude_stream
from pas_npn_lab.shaping.models import DmKind
from pas_npn_lab.shaping.statistics import image_marginal, rate_matched_spec


def delta_table(memory: int = 0, offsets=(0,)) -> CoefficientTable:
    values = np.zeros(2 * memory + 1)
    values[memory] = 1.0
    return CoefficientTable(1e-10, {n: KernelCoefficients(n, values) for n in offsets})


def box_table(half_width: int) -> CoefficientTable:
    values = np.full(2 * half_width + 1, 1.0 / (2 * half_width + 1))
    return CoefficientTable(1e-10, {0: KernelCoefficients(0, values)})


def qam_symbols(rng, length: int) -> np.ndarray:
    levels = np.array([-3, -1, 1, 3])
    return normalize_power(rng.choice(levels, size=(2, length)) + 1j * rng.choice(levels, size=(2, length)))


def shaped_symbols(amplitudes: np.ndarray, rng) -> np.ndarray:
    signs = SignSource(rng).signs(amplitudes.shape)
    return normalize_power(map_blocks(MapKind.PARALLEL, amplitudes, signs).polarizations())


def test_effective_length():
    expected_length = 21.17

    assert effective_length(0.2 * np.log(10) / 10, 80.0) == pytest.approx(expected_length, abs=0.01)
    assert effective_length(0.0, 80.0) == 80.0
    assert effective_length(1e-12, 80.0) == pytest.approx(80.0)


def test_nominal_rotation_self_and_cross_factor():
    link = LinkSpec.uniform(4, FiberSpan.smf(80.0))
    powers = [2e-3, 2e-3]
    expected_self = 1.3 * 4 * 1e-3 * FiberSpan.smf(80.0).effective_length

    assert nominal_phase_rotation(0, 0, link, powers) == pytest.approx(expected_self)
    assert nominal_phase_rotation(0, 1, link, powers) == pytest.approx(1.5 * expected_self)


def test_nominal_rotation_includes_dcf_segments():
    smf_only = LinkSpec.uniform(2, FiberSpan.smf(80.0))
    managed = LinkSpec.with_dcf(2)

    assert nominal_phase_rotation(0, 0, managed, [1e-3]) > nominal_phase_rotation(0, 0, smf_only, [1e-3])


def test_spec_phi_bar_and_validation():
    link = LinkSpec.uniform(4, FiberSpan.smf(80.0))
    spec = NpnSpec(channel=1, n_channels=3, es_n0=50.0, launch_powers_w=(1e-3, 1e-3, 1e-3))

    phi_bar = spec.phi_bar(link)

    assert phi_bar[0] == pytest.approx(1.5 * phi_bar[1])
    assert phi_bar[2] == pytest.approx(phi_bar[0])
    with pytest.raises(MetricsError):
        NpnSpec(n_channels=2, es_n0=1.0, launch_powers_w=(1e-3,)).phi_bar(link)
    with pytest.raises(ValidationError):
        NpnSpec(es_n0=0.0)
    with pytest.raises(ValidationError):
        NpnSpec(es_n0=10.0, cpr_efficiency=0.0)


def test_constant_modulus_gives_constant_phase(rng):
    qpsk = normalize_power(rng.choice([-1, 1], size=(2, 500)) + 1j * rng.choice([-1, 1], size=(2, 500)))
    table = CoefficientTable(1e-10, {0: KernelCoefficients(0, np.array([0.1, 0.2, 0.4, 0.2, 0.1]))})

    series = npn_phase_series([qpsk], table, np.array([0.3]), channel=0)

    assert np.ptp(series.interior()) < 1e-12
    assert npn_variance(series) == pytest.approx(0.0, abs=1e-24)


def test_single_channel_delta_kernel_is_instantaneous_power(rng):
    symbols = qam_symbols(rng, 300)

    series = npn_phase_series([symbols], delta_table(), np.array([0.7]), channel=0)

    assert np.allclose(series.theta, 0.7 * intensity(symbols))


def test_dispersionless_link_collapses_to_memoryless_phase(rng):
    link = LinkSpec.uniform(3, FiberSpan.smf(80.0, dispersion_ps_nm_km=0.0))
    table = CoefficientTable(1e-10, {n: compute_coefficients(link, 1e-10, 2, n) for n in (-1, 0, 1)})
    channels = [qam_symbols(rng, 400), qam_symbols(rng, 400)]
    phi_bar = np.array([0.2, 0.3])

    series = npn_phase_series(channels, table, phi_bar, channel=0)
    expected_theta = 0.2 * intensity(channels[0]) + 0.3 * intensity(channels[1])

    assert np.allclose(series.interior(), series.interior(expected_theta), atol=1e-6)


def test_cross_channel_rows_use_channel_offset(rng):
    channels = [qam_symbols(rng, 64), qam_symbols(rng, 64)]
    table = CoefficientTable(1e-10, {
        0: KernelCoefficients(0, np.array([0.0, 1.0, 0.0])),
        1: KernelCoefficients(1, np.array([0.0, 0.0, 1.0])),
    })

    series = npn_phase_series(channels, table, np.array([1.0, 1.0]), channel=0)
    expected_theta = intensity(channels[0]) + np.append(intensity(channels[1])[1:], 0.0)

    assert np.allclose(series.theta, expected_theta)
    with pytest.raises(KeyError):
        npn_phase_series(channels, table, np.array([1.0, 1.0]), channel=1)


def test_phase_series_rejects_mismatched_channels(rng):
    with pytest.raises(MetricsError):
        npn_phase_series([qam_symbols(rng, 10), qam_symbols(rng, 12)], delta_table(offsets=(0, 1)),
                         np.ones(2), channel=0)
    with pytest.raises(MetricsError):
        npn_phase_series([qam_symbols(rng, 10)], delta_table(), np.ones(2), channel=0)


def test_constant_composition_has_less_phase_noise_than_iid(ask16_alphabet):
    rng = np.random.default_rng(5)
    spec = rate_matched_spec(DmKind.CCDM, ask16_alphabet, 32)
    n_blocks = 4 * 8192 // spec.n
    ccdm = draw_amplitude_stream(spec, n_blocks, rng)
    levels = np.asarray(ask16_alphabet.levels)
    iid = rng.choice(levels, size=ccdm.shape, p=image_marginal(spec))
    table = box_table(16)

    ccdm_series = npn_phase_series([shaped_symbols(ccdm, rng)], table, np.array([1.0]), channel=0)
    iid_series = npn_phase_series([shaped_symbols(iid, rng)], table, np.array([1.0]), channel=0)

    assert npn_variance(ccdm_series) < npn_variance(iid_series)


def test_moving_average_truncates_at_edges():
    values = np.arange(6, dtype=float)
    expected_average = np.array([1.0, 1.5, 2.0, 3.0, 3.5, 4.0])

    assert np.allclose(moving_average(values, 2), expected_average)
    assert np.array_equal(moving_average(values, 0), values)


def test_metric_without_cpr_window_is_estimator_noise(rng):
    series = PhaseSeries(rng.standard_normal(200), memory=5)
    spec = NpnSpec(es_n0=40.0, cpr_half_window=0)
    expected_metric = 1.0 / (2 * 40.0) / 0.008

    assert npn_metric(series, spec) == expected_metric


def test_metric_with_full_window_is_phase_variance(rng):
    theta = rng.standard_normal(200)
    series = PhaseSeries(theta)
    spec = NpnSpec(es_n0=40.0, cpr_half_window=400)

    metric = npn_metric(series, spec)

    assert metric == pytest.approx(np.var(theta) + spec.estimator_noise, rel=1e-12)
    assert metric - np.var(theta) <= spec.estimator_noise * (1 + 1e-9)


def test_metric_is_bounded_below_by_estimator_noise(rng):
    series = PhaseSeries(np.cumsum(rng.standard_normal(1000)) * 1e-3, memory=10)

    for half_window in (0, 1, 8, 64, 2000):
        spec = NpnSpec(es_n0=20.0, cpr_half_window=half_window)
        assert npn_metric(series, spec) >= spec.estimator_noise


def test_metric_needs_interior_samples():
    series = PhaseSeries(np.arange(5, dtype=float), memory=2)

    with pytest.raises(SeriesTooShortError):
        npn_metric(series, NpnSpec(es_n0=10.0))
    with pytest.raises(SeriesTooShortError):
        npn_variance(series)


def test_phase_residual_grows_toward_frame_limit(rng):
    series = npn_phase_series([qam_symbols(rng, 20000)], box_table(8), np.array([1.0]), channel=0)
    residuals = []
    for half_window in (0, 1, 4, 16, 64, 256, 20000):
        spec = NpnSpec(es_n0=100.0, cpr_half_window=half_window)
        residuals.append(npn_metric(series, spec) - spec.estimator_noise)
    expected_limit = npn_variance(series)

    assert residuals[0] == pytest.approx(0.0, abs=1e-12)
    assert all(later >= earlier - 1e-3 * expected_limit for earlier, later in zip(residuals, residuals[1:]))
    assert residuals[-1] == pytest.approx(expected_limit, rel=1e-2)
