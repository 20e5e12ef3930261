import numpy as np
import pytest
from scipy.constants import c, h

from pas_npn_lab.channel.amplifier import ase_variance, edfa
from pas_npn_lab.channel.laser import apply_laser_phase_noise, wiener_phase
from pas_npn_lab.channel.models import WaveformGrid
from pas_npn_lab.core.errors import ChannelConfigError

SAMPLE_RATE = 80e9


def test_ase_variance_matches_formula():
    samples = 100_000
    silent = WaveformGrid(np.zeros((2, samples)), SAMPLE_RATE)

    noisy = edfa(silent, 16.0, 5.0, np.random.default_rng(5))
    measured = np.mean(np.abs(noisy.samples) ** 2)
    expected_variance = (10 ** 0.5 * 10 ** 1.6 - 1) / 2 * h * c / 1550e-9 * SAMPLE_RATE

    assert ase_variance(16.0, 5.0, SAMPLE_RATE) == pytest.approx(expected_variance)
    assert measured == pytest.approx(expected_variance, rel=0.01)


def test_unity_gain_ideal_amplifier_is_identity(rng):
    waveform = WaveformGrid(rng.normal(size=(2, 100)) + 0j, SAMPLE_RATE)

    output = edfa(waveform, 0.0, 0.0, rng)

    assert np.array_equal(output.samples, waveform.samples)


def test_noise_depends_on_seed_only(rng):
    waveform = WaveformGrid(rng.normal(size=(2, 100)) + 0j, SAMPLE_RATE)

    first = edfa(waveform, 10.0, 5.0, np.random.default_rng(1))
    again = edfa(waveform, 10.0, 5.0, np.random.default_rng(1))
    other = edfa(waveform, 10.0, 5.0, np.random.default_rng(2))
    clean = edfa(waveform, 10.0, 5.0, None)

    assert np.array_equal(first.samples, again.samples)
    assert not np.allclose(first.samples, other.samples)
    assert np.allclose(clean.samples, waveform.samples * 10 ** 0.5)


def test_negative_gain_rejected(rng):
    with pytest.raises(ChannelConfigError):
        edfa(WaveformGrid(np.zeros((2, 4)), SAMPLE_RATE), -1.0, 5.0, rng)


def test_zero_linewidth_is_identity(rng):
    symbols = rng.normal(size=(2, 50)) + 1j * rng.normal(size=(2, 50))

    assert np.array_equal(apply_laser_phase_noise(symbols, 0.0, 1e-10, rng), symbols)


def test_wiener_increment_variance(rng):
    linewidth, period = 100e3, 1e-10

    phase = wiener_phase(1_000_001, linewidth, period, rng)
    expected_variance = 2 * np.pi * linewidth * period

    assert phase[0] == 0.0
    assert np.var(np.diff(phase)) == pytest.approx(expected_variance, rel=0.02)


def test_polarizations_share_the_phase_walk(rng):
    rotated = apply_laser_phase_noise(np.ones((2, 200), dtype=complex), 1e6, 1e-10, rng)

    assert np.allclose(rotated[0], rotated[1])
    assert rotated[0, 0] == 1.0
