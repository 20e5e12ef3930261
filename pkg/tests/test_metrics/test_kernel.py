import numpy as np
import pytest
from scipy.stats import qmc

from pas_npn_lab.channel.models import FiberSpan, LinkSpec
from pas_npn_lab.core.errors import UnsupportedLinkError
from pas_npn_lab.metrics.kernel import (
    CoefficientTable,
    KernelCache,
    compute_coefficients,
    interaction_kernel,
    walk_off_memory,
)

SYMBOL_PERIOD = 1e-10


@pytest.fixture(scope="module")
def long_haul():
    return LinkSpec.uniform(15, FiberSpan.smf(80.0), name="smf-15x80")


@pytest.fixture(scope="module")
def desk_link():
    return LinkSpec.uniform(4, FiberSpan.smf(80.0), name="smf-4x80")


@pytest.fixture(scope="module")
def dispersionless():
    return LinkSpec.uniform(3, FiberSpan.smf(80.0, dispersion_ps_nm_km=0.0), name="no-dispersion")


def test_kernel_is_one_without_dispersion(dispersionless):
    mu, nu = np.meshgrid(np.linspace(-5e9, 5e9, 7), np.linspace(-4e9, 6e9, 5))

    kernel = interaction_kernel(mu, nu, dispersionless)

    assert np.allclose(kernel, 1.0, atol=1e-12)


def test_kernel_is_one_on_the_diagonal(long_haul):
    freqs = np.linspace(-20e9, 20e9, 9)

    assert np.allclose(interaction_kernel(freqs, freqs, long_haul), 1.0, atol=1e-12)
    assert np.allclose(interaction_kernel(freqs, np.zeros_like(freqs), long_haul), 1.0, atol=1e-12)


def test_kernel_matches_direct_span_sum(long_haul):
    span = long_haul.spans[0]
    mu, nu = 10e9, -10e9
    b = 4 * np.pi ** 2 * span.beta2 * nu * (nu - mu)
    z = -span.alpha + 1j * b
    length = span.length_km
    direct = sum(np.exp(1j * b * length * s) for s in range(15)) * (np.exp(z * length) - 1) / z

    expected_kernel = direct / (15 * span.effective_length)

    assert interaction_kernel(mu, nu, long_haul) == pytest.approx(expected_kernel, rel=1e-10)


def test_kernel_rejects_mixed_spans():
    with pytest.raises(UnsupportedLinkError):
        interaction_kernel(0.0, 1e9, LinkSpec.with_dcf(2))


def test_walk_off_memory(long_haul):
    expected_memory = 21

    assert walk_off_memory(long_haul, SYMBOL_PERIOD) == expected_memory
    assert walk_off_memory(long_haul, SYMBOL_PERIOD, margin=0) == expected_memory - 4
    assert walk_off_memory(long_haul, SYMBOL_PERIOD, max_separation_hz=20e9) > expected_memory


def test_coefficients_collapse_to_delta_without_dispersion(dispersionless):
    row = compute_coefficients(dispersionless, SYMBOL_PERIOD, 6)
    expected_values = np.zeros(13)
    expected_values[6] = 1.0

    assert row.memory == 6
    assert np.allclose(row.values, expected_values, atol=1e-6)
    assert not row.flagged


def test_coefficients_follow_monte_carlo_sum(desk_link):
    memory = walk_off_memory(desk_link, SYMBOL_PERIOD)
    row = compute_coefficients(desk_link, SYMBOL_PERIOD, memory)

    sampler = qmc.Sobol(d=2, scramble=True, seed=11)
    points = (sampler.random_base2(m=16) - 0.5) / SYMBOL_PERIOD
    mu, nu = points[:, 0], points[:, 1]
    m = np.arange(-memory, memory + 1)
    dirichlet = np.exp(-2j * np.pi * np.outer(mu - nu, m) * SYMBOL_PERIOD).sum(axis=1)
    expected_sum = np.mean(interaction_kernel(mu, nu, desk_link) * dirichlet).real

    assert row.values.sum() == pytest.approx(expected_sum, rel=1e-2)


def test_coefficients_decay_within_walk_off(long_haul):
    memory = walk_off_memory(long_haul, SYMBOL_PERIOD)

    row = compute_coefficients(long_haul, SYMBOL_PERIOD, memory)

    assert abs(row[memory]) < 0.05 * abs(row[0])
    assert row[memory + 1] == 0.0
    assert np.isfinite(row.residual)


def test_coefficients_reject_bad_arguments(desk_link):
    with pytest.raises(ValueError):
        compute_coefficients(desk_link, 0.0, 4)
    with pytest.raises(ValueError):
        compute_coefficients(desk_link, SYMBOL_PERIOD, -1)


def test_kernel_cache_round_trip(runtime_dirs, desk_link):
    cache = KernelCache()

    computed = cache.get(desk_link, SYMBOL_PERIOD, 3, [0, 1])
    cached = cache.get(desk_link, SYMBOL_PERIOD, 3, [1, 0])
    files = list((runtime_dirs / "cache").glob("kernel_*.csv"))

    assert len(files) == 1
    assert isinstance(cached, CoefficientTable)
    assert sorted(cached.rows) == [0, 1]
    for offset in (0, 1):
        assert np.array_equal(cached.row(offset).values, computed.row(offset).values)


def test_kernel_cache_key_tracks_link(desk_link, long_haul):
    cache = KernelCache("unused")

    assert cache.key(desk_link, SYMBOL_PERIOD, 3, [0]) == cache.key(desk_link, SYMBOL_PERIOD, 3, [0])
    assert cache.key(desk_link, SYMBOL_PERIOD, 3, [0]) != cache.key(long_haul, SYMBOL_PERIOD, 3, [0])
    assert cache.key(desk_link, SYMBOL_PERIOD, 3, [0]) != cache.key(desk_link, SYMBOL_PERIOD, 3, [0], spacing_hz=50e9)
