"""Achievable information rate under bit-metric decoding."""
import logging
from dataclasses import dataclass

import numpy as np

from pas_npn_lab.core.config import pas_config
from pas_npn_lab.shaping.statistics import entropy_bits

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AirEstimate:
    """AIR in bits per symbol per polarization with its Monte-Carlo confidence half-width."""
    air: float
    half_width: float

    def __float__(self) -> float:
        return self.air


def air_bmd(llrs: np.ndarray, bits: np.ndarray, amplitude_priors: np.ndarray | None = None,
            num_levels: int | None = None) -> AirEstimate:
    """
    AIR = H(X) - sum over bit levels of E[log2(1 + exp(-(1 - 2b) L))].

    ``llrs`` and ``bits`` have the layout of demap_bit_metrics: (..., 2, m)
    for complex symbols, so one polarization symbol carries 2m bits. H(X) is
    the entropy of the symbol prior: twice the per-dimension entropy of the
    shaped amplitudes with uniform signs.
    """
    llrs = np.asarray(llrs, dtype=float)
    bits = np.asarray(bits)
    if llrs.shape != bits.shape:
        raise ValueError(f"LLRs {llrs.shape} and bits {bits.shape} differ in shape")
    bits_per_dimension = llrs.shape[-1]
    if amplitude_priors is None:
        levels = num_levels or 2 ** (bits_per_dimension - 1)
        amplitude_priors = np.full(levels, 1.0 / levels)
    symbol_entropy = 2.0 * (entropy_bits(np.asarray(amplitude_priors)) + 1.0)

    signed = (1 - 2 * bits) * llrs
    penalty = np.logaddexp(0.0, -signed) / np.log(2.0)
    per_symbol = penalty.reshape(-1, 2 * bits_per_dimension).sum(axis=-1)

    air = symbol_entropy - float(np.mean(per_symbol))
    half_width = pas_config.confidence_z * float(np.std(per_symbol)) / np.sqrt(len(per_symbol))
    logger.debug(f"AIR {air:.4f} +/- {half_width:.4f} over {len(per_symbol)} symbols")
    return AirEstimate(air, half_width)
