import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

from pas_npn_lab.channel.laser import wiener_phase
from pas_npn_lab.core.errors import UndefinedPhaseError
from pas_npn_lab.cpr.models import CprKind, CprSpec
from pas_npn_lab.cpr.recovery import bps, cycle_slip_fix, mpr, recover_carrier
from pas_npn_lab.pas.constellation import QamConstellation


@pytest.fixture(scope="module")
def qam16():
    return QamConstellation.square(16)


@pytest.fixture
def symbols(qam16, rng):
    scale = qam16.scale_for()
    return scale * rng.choice(qam16.points, size=2000), scale


def wrapped(delta: np.ndarray) -> np.ndarray:
    """Phase difference folded into [-pi/4, pi/4)."""
    return np.mod(delta + np.pi / 4, np.pi / 2) - np.pi / 4


def test_mpr_recovers_exact_rotation(symbols):
    sent, _ = symbols

    phase, corrected = mpr(sent * np.exp(0.3j), sent)

    assert phase == pytest.approx(0.3)
    assert np.allclose(corrected, sent)


def test_mpr_without_rotation(symbols):
    sent, _ = symbols

    phase, _ = mpr(sent, sent)

    assert phase == pytest.approx(0.0, abs=1e-12)


def test_mpr_concentrates_under_noise(qam16, rng):
    scale = qam16.scale_for()
    sent = scale * rng.choice(qam16.points, size=100_000)
    noise = np.sqrt(0.01 / 2) * (rng.standard_normal(sent.size) + 1j * rng.standard_normal(sent.size))

    phase, _ = mpr(sent * np.exp(0.3j) + noise, sent)

    assert abs(phase - 0.3) < 1e-3


def test_mpr_rejects_zero_energy():
    with pytest.raises(UndefinedPhaseError):
        mpr(np.zeros(8, dtype=complex), np.ones(8, dtype=complex))


def test_mpr_per_polarization(symbols):
    sent, _ = symbols
    pair = np.vstack([sent, sent])
    rotated = pair * np.exp(1j * np.array([[0.1], [-0.2]]))

    phase, _ = mpr(rotated, pair)

    assert np.allclose(phase, [0.1, -0.2])


def test_bps_recovers_offset_on_test_grid(symbols, qam16):
    sent, scale = symbols
    spec = CprSpec.bps(8)
    offset = spec.test_grid()[40]

    phase, corrected = bps(sent * np.exp(1j * offset), qam16, scale, spec)

    assert np.allclose(phase, offset)
    assert np.allclose(corrected, sent)


def test_bps_quantizes_offset_between_grid_points(symbols, qam16):
    sent, scale = symbols
    spec = CprSpec.bps(8)
    grid = spec.test_grid()
    offset = grid[40] + 0.3 * (grid[1] - grid[0])

    phase, _ = bps(sent * np.exp(1j * offset), qam16, scale, spec)
    interior = phase[8:-8]

    assert np.allclose(wrapped(interior - grid[40]), 0.0)
    assert np.all(np.abs(wrapped(interior - offset)) <= np.pi / (4 * spec.test_phases) + 1e-12)


def test_full_window_bps_matches_mpr(symbols, qam16):
    sent, scale = symbols
    spec = CprSpec.bps(len(sent))
    received = sent * np.exp(0.1j)

    phase, _ = bps(received, qam16, scale, spec)
    mpr_phase, _ = mpr(received, sent)

    assert abs(wrapped(phase[len(sent) // 2] - mpr_phase)) <= np.pi / (4 * spec.test_phases) + 1e-9


def test_bps_preserves_symbol_magnitudes(symbols, qam16, rng):
    sent, scale = symbols
    received = sent + 0.05 * (rng.standard_normal(sent.size) + 1j * rng.standard_normal(sent.size))

    _, corrected = bps(received, qam16, scale, CprSpec.bps(16))

    assert np.allclose(np.abs(corrected), np.abs(received), rtol=1e-12)


def test_bps_rotation_equivariance(symbols, qam16, rng):
    sent, scale = symbols
    spec = CprSpec.bps(16)
    step = np.pi / 2 / spec.test_phases
    received = sent + 0.03 * (rng.standard_normal(sent.size) + 1j * rng.standard_normal(sent.size))

    base, _ = bps(received, qam16, scale, spec)
    turned, _ = bps(received * np.exp(3j * step), qam16, scale, spec)

    assert np.allclose(wrapped(turned - base - 3 * step), 0.0, atol=1e-9)


def test_bps_window_length_trades_noise_against_tracking(qam16):
    rng = np.random.default_rng(7)
    scale = qam16.scale_for()
    length = 20_000
    sent = scale * rng.choice(qam16.points, size=length)
    true_phase = wiener_phase(length, 1e5, 1e-10, rng)
    noise = np.sqrt(10 ** -1.7 / 2) * (rng.standard_normal(length) + 1j * rng.standard_normal(length))
    received = sent * np.exp(1j * true_phase) + noise

    variances = {}
    for half_window in (2, 8, 24, 512):
        phase, _ = bps(received, qam16, scale, CprSpec.bps(half_window))
        residual = wrapped(phase - true_phase)[600:-600]
        variances[half_window] = np.var(residual)

    best_inner = min(variances[8], variances[24])

    assert best_inner < variances[2]
    assert best_inner < variances[512]


def test_cycle_slip_fix_undoes_quarter_turn(symbols):
    sent, _ = symbols

    assert np.array_equal(cycle_slip_fix(sent * 1j, sent), sent)


def test_cycle_slip_fix_keeps_aligned_input(symbols, rng):
    sent, _ = symbols
    noisy = sent + 0.05 * (rng.standard_normal(sent.size) + 1j * rng.standard_normal(sent.size))

    assert np.array_equal(cycle_slip_fix(noisy, sent), noisy)


def test_injected_slip_leaves_symbol_errors_unchanged(symbols, qam16, rng):
    sent, scale = symbols
    noisy = sent + 0.1 * (rng.standard_normal(sent.size) + 1j * rng.standard_normal(sent.size))
    slipped = noisy.copy()
    slipped[1024:] *= 1j

    fixed = cycle_slip_fix(slipped, sent, block=64)

    expected_errors = np.count_nonzero(qam16.hard_decision(noisy, scale) != sent)

    assert np.count_nonzero(qam16.hard_decision(fixed, scale) != sent) == expected_errors


def test_recover_carrier_dispatch(symbols, qam16):
    sent, scale = symbols
    pair = np.vstack([sent, sent])
    received = pair * np.exp(0.2j)

    corrected_mpr, track_mpr = recover_carrier(received, pair, qam16, scale, CprSpec.mpr())
    corrected_bps, track_bps = recover_carrier(received, pair, qam16, scale, CprSpec.bps(8))

    assert track_mpr.phase.shape == (2, len(sent))
    assert np.allclose(track_mpr.phase, 0.2)
    assert np.allclose(corrected_mpr, pair)
    assert track_bps.spec.kind is CprKind.BPS
    assert np.all(np.abs(wrapped(track_bps.phase[:, 8:-8] - 0.2)) <= np.pi / (4 * 64) + 1e-9)


def test_phase_track_csv(tmp_path, symbols, qam16):
    sent, scale = symbols
    pair = np.vstack([sent, sent])
    _, track = recover_carrier(pair, pair, qam16, scale, CprSpec.bps(4))
    path = tmp_path / "phase.csv"

    track.to_csv(path)
    frame = pd.read_csv(path, index_col="symbol")

    assert list(frame.columns) == ["phase_x", "phase_y"]
    assert len(frame) == len(sent)


def test_bps_needs_two_test_phases():
    with pytest.raises(ValidationError):
        CprSpec(kind=CprKind.BPS, half_window=4, test_phases=1)
    with pytest.raises(ValidationError):
        CprSpec(kind=CprKind.BPS, half_window=-1)
