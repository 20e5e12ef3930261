"""EDFA model: power gain plus circular Gaussian ASE per polarization."""
import logging

import numpy as np

from pas_npn_lab.channel.models import WaveformGrid, photon_energy
from pas_npn_lab.core.errors import ChannelConfigError

logger = logging.getLogger(__name__)


def ase_variance(gain_db: float, noise_figure_db: float, bandwidth_hz: float) -> float:
    """
    Complex ASE variance per polarization, n_sp (G - 1) h nu B with the
    spontaneous emission factor implied by NF = (1 + 2 n_sp (G - 1)) / G.
    """
    gain = 10 ** (gain_db / 10.0)
    noise_figure = 10 ** (noise_figure_db / 10.0)
    return max(noise_figure * gain - 1.0, 0.0) / 2.0 * photon_energy() * bandwidth_hz


def edfa(waveform: WaveformGrid, gain_db: float, noise_figure_db: float,
         rng: np.random.Generator | None = None) -> WaveformGrid:
    if gain_db < 0:
        raise ChannelConfigError(f"EDFA gain must be non-negative, got {gain_db} dB")
    samples = waveform.samples * 10 ** (gain_db / 20.0)
    if rng is not None:
        variance = ase_variance(gain_db, noise_figure_db, waveform.sample_rate)
        noise = rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
        samples = samples + np.sqrt(variance / 2.0) * noise
    return waveform.replace(samples)
