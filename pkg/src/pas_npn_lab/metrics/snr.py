"""Effective SNR and correlation statistics used to judge the metrics."""
import numpy as np
from scipy import stats

from pas_npn_lab.core.config import metrics_config
from pas_npn_lab.core.errors import MetricsError, UndefinedCorrelationError


def effective_snr(received, transmitted) -> float:
    """
    |h|^2 E|t|^2 / E|r - h t|^2 in dB with h the least-squares complex gain, capped from above.

    The numerator carries the gain, so this differs from E|t|^2 / E|r - h t|^2 whenever |h| != 1.
    """
    received = np.asarray(received).ravel()
    transmitted = np.asarray(transmitted).ravel()
    if received.shape != transmitted.shape:
        raise MetricsError(f"Received {received.shape} and transmitted {transmitted.shape} differ in length")
    signal = np.vdot(transmitted, transmitted).real
    if signal == 0:
        raise MetricsError("Transmitted sequence has zero energy")
    gain = np.vdot(transmitted, received) / signal
    error = np.mean(np.abs(received - gain * transmitted) ** 2)
    cap = metrics_config.snr_cap_db
    if error == 0:
        return cap
    return float(min(10 * np.log10(abs(gain) ** 2 * np.mean(np.abs(transmitted) ** 2) / error), cap))


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise MetricsError("Correlation needs two 1D series of equal length")
    if len(a) < 3:
        raise MetricsError(f"Correlation needs at least 3 samples, got {len(a)}")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise UndefinedCorrelationError("Correlation of a constant series is undefined")
    return float(stats.pearsonr(a, b).statistic)
