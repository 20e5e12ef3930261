"""
Mean phase rotation, blind phase search and supervised cycle-slip compensation.

All functions work along the last axis, so a (2, T) array carries the two
polarizations independently.
"""
import logging

import numpy as np

from pas_npn_lab.core.config import cpr_config
from pas_npn_lab.core.errors import CprError, UndefinedPhaseError
from pas_npn_lab.cpr.models import CprKind, CprSpec, PhaseTrack
from pas_npn_lab.pas.constellation import QamConstellation

logger = logging.getLogger(__name__)

QUARTER_TURNS = np.array([1, 1j, -1, -1j])


def mpr(received: np.ndarray, transmitted: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Data-aided global phase arg(sum r conj(t)) and the derotated symbols."""
    received = np.asarray(received)
    transmitted = np.asarray(transmitted)
    if received.shape != transmitted.shape:
        raise CprError(f"Received {received.shape} and transmitted {transmitted.shape} differ in shape")
    correlation = np.sum(received * np.conj(transmitted), axis=-1)
    if np.any(correlation == 0):
        raise UndefinedPhaseError("Mean phase rotation is undefined for zero-energy input")
    phase = np.angle(correlation)
    return phase, received * np.exp(-1j * np.asarray(phase)[..., None])


def _window_sums(values: np.ndarray, half_window: int) -> np.ndarray:
    """Sums over [k - w, k + w] with w = min(half_window, k, T - 1 - k), along axis -2."""
    length = values.shape[-2]
    k = np.arange(length)
    w = np.minimum(np.minimum(half_window, k), length - 1 - k)
    padded = np.concatenate([np.zeros_like(values[..., :1, :]), np.cumsum(values, axis=-2)], axis=-2)
    return padded[..., k + w + 1, :] - padded[..., k - w, :]


def bps(received: np.ndarray, constellation: QamConstellation, scale: float,
        spec: CprSpec) -> tuple[np.ndarray, np.ndarray]:
    """Blind phase search; returns the unwrapped per-symbol phase and the derotated symbols."""
    received = np.asarray(received, dtype=complex)
    grid = spec.test_grid()
    rotated = received[..., None] * np.exp(-1j * grid)
    distances = np.abs(rotated - constellation.hard_decision(rotated, scale)) ** 2
    best = np.argmin(_window_sums(distances, spec.half_window), axis=-1)
    phase = np.unwrap(grid[best], period=spec.phase_range, axis=-1)
    logger.debug(f"BPS over {received.shape[-1]} symbols, {spec.half_window=}, {spec.test_phases} test phases")
    return phase, received * np.exp(-1j * phase)


def cycle_slip_fix(corrected: np.ndarray, transmitted: np.ndarray, block: int | None = None) -> np.ndarray:
    """Per block, rotate by the multiple of pi/2 that best aligns with the reference."""
    block = block or cpr_config.cycle_slip_block
    corrected = np.asarray(corrected, dtype=complex)
    transmitted = np.asarray(transmitted)
    length = corrected.shape[-1]
    starts = np.arange(0, length, block)
    correlation = np.add.reduceat(corrected * np.conj(transmitted), starts, axis=-1)
    quarter_turns = np.argmax(np.real(correlation[..., None] * QUARTER_TURNS), axis=-1)
    rotation = np.repeat(QUARTER_TURNS[quarter_turns], np.diff(np.append(starts, length)), axis=-1)
    slips = int(np.count_nonzero(np.diff(quarter_turns, axis=-1)))
    if slips:
        logger.debug(f"Corrected {slips} cycle slips")
    return corrected * rotation


def recover_carrier(received: np.ndarray, transmitted: np.ndarray, constellation: QamConstellation,
                    scale: float, spec: CprSpec) -> tuple[np.ndarray, PhaseTrack]:
    if spec.kind is CprKind.MPR:
        phase, corrected = mpr(received, transmitted)
        track = np.broadcast_to(np.asarray(phase)[..., None], np.shape(received))
        return corrected, PhaseTrack(track, spec)

    phase, corrected = bps(received, constellation, scale, spec)
    if spec.fix_cycle_slips:
        corrected = cycle_slip_fix(corrected, transmitted)
    return corrected, PhaseTrack(phase, spec)
