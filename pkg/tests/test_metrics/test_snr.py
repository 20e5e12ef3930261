import numpy as np
import pytest

from pas_npn_lab.core.errors import MetricsError, UndefinedCorrelationError
from pas_npn_lab.metrics.snr import effective_snr, pearson


@pytest.fixture
def qpsk(rng):
    return (rng.choice([-1, 1], size=100_000) + 1j * rng.choice([-1, 1], size=100_000)) / np.sqrt(2)


def test_clean_signal_hits_cap(qpsk):
    expected_snr = 100.0

    assert effective_snr(qpsk, qpsk) == expected_snr


def test_known_noise_level(qpsk, rng):
    noise = np.sqrt(0.01 / 2) * (rng.standard_normal(qpsk.size) + 1j * rng.standard_normal(qpsk.size))
    expected_snr = 20.0

    assert effective_snr(qpsk + noise, qpsk) == pytest.approx(expected_snr, abs=0.05)


def test_gain_and_rotation_are_fitted_out(qpsk, rng):
    noise = 0.1 * (rng.standard_normal(qpsk.size) + 1j * rng.standard_normal(qpsk.size))
    reference = effective_snr(qpsk + noise, qpsk)

    assert effective_snr(0.3 * np.exp(0.4j) * (qpsk + noise), qpsk) == pytest.approx(reference, abs=1e-9)
    assert effective_snr(5.0 * (qpsk + noise), 5.0 * qpsk) == pytest.approx(reference, abs=1e-9)


def test_snr_rejects_bad_input(qpsk):
    with pytest.raises(MetricsError):
        effective_snr(qpsk[:10], qpsk[:11])
    with pytest.raises(MetricsError):
        effective_snr(qpsk[:10], np.zeros(10))


def test_pearson_extremes():
    a = np.array([0.3, 1.2, 2.0, 2.5, 4.1])

    assert pearson(a, 2 * a + 1) == pytest.approx(1.0)
    assert pearson(a, -a) == pytest.approx(-1.0)


def test_pearson_undefined_cases():
    with pytest.raises(UndefinedCorrelationError):
        pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(MetricsError):
        pearson([1.0, 2.0], [2.0, 1.0])
    with pytest.raises(MetricsError):
        pearson([1.0, 2.0, 3.0], [2.0, 1.0])
