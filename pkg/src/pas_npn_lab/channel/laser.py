"""Wiener laser phase noise."""
import numpy as np

from pas_npn_lab.channel.models import WaveformGrid


def wiener_phase(length: int, linewidth_hz: float, period_s: float, rng: np.random.Generator) -> np.ndarray:
    """Phase walk starting at 0 with increment variance 2 pi linewidth period."""
    if linewidth_hz < 0:
        raise ValueError(f"{linewidth_hz=} must be non-negative")
    phase = np.zeros(length)
    if linewidth_hz > 0 and length > 1:
        steps = rng.normal(0.0, np.sqrt(2.0 * np.pi * linewidth_hz * period_s), length - 1)
        phase[1:] = np.cumsum(steps)
    return phase


def apply_laser_phase_noise(signal: WaveformGrid | np.ndarray, linewidth_hz: float, period_s: float,
                            rng: np.random.Generator) -> WaveformGrid | np.ndarray:
    """Rotate every polarization by one shared phase walk along the last axis."""
    if linewidth_hz == 0:
        return signal
    samples = signal.samples if isinstance(signal, WaveformGrid) else np.asarray(signal)
    rotated = samples * np.exp(1j * wiener_phase(samples.shape[-1], linewidth_hz, period_s, rng))
    if isinstance(signal, WaveformGrid):
        return signal.replace(rotated)
    return rotated
