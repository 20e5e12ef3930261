"""Energy dispersion indices of symbol sequences (EDI and its exponentially weighted form)."""
import logging
import math

import numpy as np
from scipy.signal import fftconvolve

from pas_npn_lab.core.config import metrics_config
from pas_npn_lab.core.errors import SeriesTooShortError

logger = logging.getLogger(__name__)


def _rows(symbols) -> np.ndarray:
    return np.atleast_2d(np.abs(np.asarray(symbols)) ** 2)


def _valid_convolve(energies: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # fftconvolve swaps its inputs in valid mode when the taps are longer
    if energies.shape[-1] < taps.shape[-1]:
        raise SeriesTooShortError(f"Series of {energies.shape[-1]} symbols is shorter than {taps.shape[-1]} taps")
    return fftconvolve(energies, taps, mode="valid", axes=-1)


def _dispersion_index(weighted: np.ndarray) -> float:
    if weighted.shape[-1] == 0:
        raise SeriesTooShortError("No interior samples left after removing the window edges")
    mean = np.mean(weighted, axis=-1)
    return float(np.mean(np.var(weighted, axis=-1) / mean))


def edi(symbols, window: int) -> float:
    """Var/Mean of sums of W consecutive symbol energies; only complete windows count."""
    if window < 1:
        raise ValueError(f"{window=} must be at least 1")
    energies = _rows(symbols)
    taps = np.ones((1, window))
    weighted = _valid_convolve(energies, taps)
    return _dispersion_index(weighted)


def eedi_taps(forgetting: float, truncation: float | None = None) -> np.ndarray:
    """lambda^|m| for |m| <= K with K the first lag whose weight drops below the truncation level."""
    truncation = truncation or metrics_config.eedi_truncation
    if not 0 <= forgetting < 1:
        raise ValueError(f"Exponential taps need 0 <= lambda < 1, got {forgetting}")
    if forgetting == 0:
        return np.ones(1)
    half = math.ceil(math.log(truncation) / math.log(forgetting))
    return forgetting ** np.abs(np.arange(-half, half + 1))


def eedi(symbols, forgetting: float | None = None, window: int | None = None) -> float:
    """
    Var(G)/E(G) with G[k] = sum_m lambda^|m| |x[k+m]|^2.

    A (P, T) input is evaluated per row and averaged. lambda = 1 is the EDI
    and needs an explicit window.
    """
    forgetting = metrics_config.eedi_forgetting if forgetting is None else forgetting
    if not 0 <= forgetting <= 1:
        raise ValueError(f"Forgetting factor {forgetting} outside [0, 1]")
    if forgetting == 1:
        if window is None:
            raise ValueError("lambda = 1 needs a finite window")
        return edi(symbols, window)

    taps = eedi_taps(forgetting)
    energies = _rows(symbols)
    # only samples whose whole tap span lies inside the frame
    weighted = _valid_convolve(energies, taps[None, :])
    logger.debug(f"EEDI with lambda={forgetting}, {len(taps)} taps, {weighted.shape[-1]} interior samples")
    return _dispersion_index(weighted)
