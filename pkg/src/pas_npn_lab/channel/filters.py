"""
Pulse shaping and WDM multiplexing on the FFT grid.

Frames are periodic: filtering multiplies spectra, frequency shifts are
whole FFT bins. The transmit filter carries a gain of ``sps`` so that a
unit-energy symbol stream gives a unit-power waveform; the matched filter
has unit DC gain so the cascade sampled at symbol instants is the identity.
"""
import logging

import numpy as np
from scipy import fft

from pas_npn_lab.channel.models import WaveformGrid, WdmGrid
from pas_npn_lab.core.errors import ChannelConfigError

logger = logging.getLogger(__name__)


def rrc_response(freqs: np.ndarray, baud: float, rolloff: float) -> np.ndarray:
    """Root-raised-cosine amplitude response with H(0) = 1."""
    f = np.abs(np.asarray(freqs, dtype=float))
    low = (1.0 - rolloff) * baud / 2.0
    high = (1.0 + rolloff) * baud / 2.0
    response = np.zeros_like(f)
    response[f <= low] = 1.0
    if rolloff > 0:
        band = (f > low) & (f <= high)
        response[band] = np.cos(np.pi / (2.0 * rolloff * baud) * (f[band] - low))
    return response


def _check_oversampling(sps: int, rolloff: float) -> None:
    if not 0 <= rolloff <= 1:
        raise ChannelConfigError(f"Rolloff {rolloff} outside [0, 1]")
    if sps < 2 * (1 + rolloff):
        raise ChannelConfigError(f"{sps} samples per symbol cannot hold an RRC pulse with rolloff {rolloff}")


def _filter(samples: np.ndarray, sample_rate: float, baud: float, rolloff: float, gain: float) -> np.ndarray:
    freqs = fft.fftfreq(samples.shape[-1], 1.0 / sample_rate)
    return fft.ifft(fft.fft(samples, axis=-1) * (gain * rrc_response(freqs, baud, rolloff)), axis=-1)


def rrc_shape(symbols: np.ndarray, rolloff: float, sps: int, baud: float) -> WaveformGrid:
    """Upsample (2, T) symbols by ``sps`` and RRC-filter them into a waveform at ``sps * baud``."""
    _check_oversampling(sps, rolloff)
    symbols = np.atleast_2d(np.asarray(symbols, dtype=complex))
    upsampled = np.zeros((symbols.shape[0], symbols.shape[1] * sps), dtype=complex)
    upsampled[:, ::sps] = symbols
    sample_rate = sps * baud
    return WaveformGrid(_filter(upsampled, sample_rate, baud, rolloff, float(sps)), sample_rate)


def matched_filter(waveform: WaveformGrid, baud: float, rolloff: float) -> WaveformGrid:
    _check_oversampling(int(round(waveform.sample_rate / baud)), rolloff)
    return waveform.replace(_filter(waveform.samples, waveform.sample_rate, baud, rolloff, 1.0))


def sample_symbols(waveform: WaveformGrid, baud: float, offset: int = 0) -> np.ndarray:
    """Symbol-instant samples of a matched-filtered waveform, shape (2, T)."""
    sps = waveform.sample_rate / baud
    if abs(sps - round(sps)) > 1e-9:
        raise ChannelConfigError(f"Sample rate {waveform.sample_rate} is not an integer multiple of {baud=}")
    return waveform.samples[:, offset::int(round(sps))]


def _bin_offset(frequency: float, n_samples: int, sample_rate: float) -> int:
    return int(round(frequency * n_samples / sample_rate))


def _shift(samples: np.ndarray, bins: int) -> np.ndarray:
    n = samples.shape[-1]
    return samples * np.exp(2j * np.pi * bins * np.arange(n) / n)


def wdm_mux(channels: list[WaveformGrid], grid: WdmGrid) -> WaveformGrid:
    """Sum of channel waveforms, each shifted to its (bin-snapped) centre frequency."""
    if len(channels) != grid.n_channels:
        raise ChannelConfigError(f"Grid has {grid.n_channels} channels, got {len(channels)} waveforms")
    grid.check_bandwidth()
    n = channels[0].n_samples
    total = np.zeros((2, n), dtype=complex)
    for waveform, centre in zip(channels, grid.center_frequencies):
        if waveform.n_samples != n or waveform.sample_rate != grid.sample_rate:
            raise ChannelConfigError("All channel waveforms need the grid sample rate and a common length")
        total += _shift(waveform.samples, _bin_offset(centre, n, grid.sample_rate))
    return WaveformGrid(total, grid.sample_rate)


def wdm_demux(waveform: WaveformGrid, grid: WdmGrid, index: int) -> WaveformGrid:
    """Downshift channel ``index`` to baseband and keep the band |f| <= spacing / 2."""
    if not 0 <= index < grid.n_channels:
        raise ChannelConfigError(f"Channel index {index} outside grid of {grid.n_channels}")
    grid.check_bandwidth()
    bins = _bin_offset(grid.center_frequencies[index], waveform.n_samples, waveform.sample_rate)
    shifted = _shift(waveform.samples, -bins)
    if grid.n_channels > 1:
        freqs = fft.fftfreq(waveform.n_samples, 1.0 / waveform.sample_rate)
        keep = np.abs(freqs) <= grid.spacing / 2.0
        shifted = fft.ifft(fft.fft(shifted, axis=-1) * keep, axis=-1)
    result = waveform.replace(shifted)
    logger.debug(f"Demultiplexed channel {index} ({bins} bins)")
    return result


def channel_offset(grid: WdmGrid, index: int, n_samples: int) -> float:
    """Bin-snapped centre frequency of channel ``index`` in Hz."""
    bins = _bin_offset(grid.center_frequencies[index], n_samples, grid.sample_rate)
    return bins * grid.sample_rate / n_samples
