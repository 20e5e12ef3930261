"""Bit-wise demapping with an AWGN-matched metric and shaped priors."""
import numpy as np
from scipy.special import logsumexp

from pas_npn_lab.core.config import pas_config
from pas_npn_lab.pas.constellation import QamConstellation


def demap_bit_metrics(received: np.ndarray, noise_variance: float, constellation: QamConstellation,
                      amplitude_priors: np.ndarray | None = None, scale: float | None = None) -> np.ndarray:
    """
    Per-bit LLRs log P(b=0 | r) / P(b=1 | r).

    ``noise_variance`` is the complex noise variance N0 (N0/2 per real
    dimension). Complex input of shape S gives LLRs of shape S + (2, m) with
    the I dimension first; real input gives S + (m,). ``scale`` defaults to
    the unit-energy scale of the priors.
    """
    if noise_variance <= 0:
        raise ValueError(f"{noise_variance=} must be positive")
    received = np.asarray(received)
    if np.iscomplexobj(received):
        received = np.stack([received.real, received.imag], axis=-1)
    if scale is None:
        scale = constellation.scale_for(amplitude_priors)

    points = scale * constellation.dimension_points
    priors = constellation.dimension_priors(amplitude_priors)
    # zero-prior points drop out of the metric
    log_priors = np.log(priors, out=np.full_like(priors, -np.inf, dtype=float), where=priors > 0)
    sigma2 = noise_variance / 2.0
    metric = -((received[..., None] - points) ** 2) / (2.0 * sigma2) + log_priors

    labels = constellation.labels
    llrs = np.empty(received.shape + (labels.shape[1],))
    # a bit value carried only by zero-prior points gives an infinite LLR before clipping
    with np.errstate(divide="ignore", invalid="ignore"):
        for bit in range(labels.shape[1]):
            zero = labels[:, bit] == 0
            llrs[..., bit] = logsumexp(metric[..., zero], axis=-1) - logsumexp(metric[..., ~zero], axis=-1)
    return np.clip(llrs, -pas_config.llr_clip, pas_config.llr_clip)


def transmitted_bits(symbols: np.ndarray, constellation: QamConstellation, scale: float) -> np.ndarray:
    """Labels of clean transmitted symbols in the layout returned by demap_bit_metrics."""
    symbols = np.asarray(symbols)
    if np.iscomplexobj(symbols):
        symbols = np.stack([symbols.real, symbols.imag], axis=-1)
    return constellation.label_bits(np.rint(symbols / scale))
