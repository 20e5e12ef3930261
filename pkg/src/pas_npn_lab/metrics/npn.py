"""
Nonlinear phase noise model: per-symbol phase rotation from the intensity
of all channels, and its variance after a moving-average CPR.

Symbol sequences are normalized to unit average power per polarization;
absolute power enters only through the nominal rotations phi_bar.
"""
import logging
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from pas_npn_lab.channel.models import LinkSpec
from pas_npn_lab.core.config import metrics_config
from pas_npn_lab.core.errors import MetricsError, SeriesTooShortError
from pas_npn_lab.metrics.kernel import CoefficientTable

logger = logging.getLogger(__name__)


def effective_length(alpha: float, length_km: float) -> float:
    """(1 - exp(-alpha L)) / alpha with alpha the power attenuation in 1/km."""
    if alpha == 0:
        return length_km
    return float(-np.expm1(-alpha * length_km) / alpha)


def _integrated_power(link: LinkSpec, launch_power_w: float) -> float:
    """Integral of the channel power along the link (W km)."""
    total = 0.0
    for span in link.spans:
        power = launch_power_w * 10 ** (span.launch_offset_db / 10.0)
        total += span.gamma_w_km * power * effective_length(span.alpha, span.length_km)
    return total


def nominal_phase_rotation(i: int, ell: int, link: LinkSpec, powers_w) -> float:
    """
    phi_bar_{i,l} = (3/2 - delta_{il}/2) gamma integral P_l, with P_l the
    per-polarization power of channel l (half its launch power).
    """
    factor = 1.0 if i == ell else 1.5
    return factor * _integrated_power(link, powers_w[ell] / 2.0)


def intensity(symbols: np.ndarray) -> np.ndarray:
    """|x|^2 + |y|^2 of a (2, T) dual-polarization sequence."""
    symbols = np.atleast_2d(symbols)
    return np.sum(np.abs(symbols) ** 2, axis=0)


def normalize_power(symbols: np.ndarray) -> np.ndarray:
    """Scale to unit average power per polarization."""
    symbols = np.atleast_2d(np.asarray(symbols, dtype=complex))
    power = np.mean(np.abs(symbols) ** 2)
    if power == 0:
        raise MetricsError("Cannot normalize an all-zero symbol sequence")
    return symbols / np.sqrt(power)


def moving_average(values: np.ndarray, half_window: int) -> np.ndarray:
    """Centred mean over [k - N, k + N], truncated to the available samples at the edges."""
    if half_window == 0:
        return np.array(values, dtype=float)
    length = len(values)
    k = np.arange(length)
    lo = np.maximum(k - half_window, 0)
    hi = np.minimum(k + half_window + 1, length)
    cumulative = np.concatenate([[0.0], np.cumsum(values)])
    return (cumulative[hi] - cumulative[lo]) / (hi - lo)


@dataclass
class PhaseSeries:
    """Nonlinear phase theta[k] of one channel; ``memory`` symbols at each edge are not interior."""
    theta: np.ndarray
    memory: int = 0

    def estimate(self, half_window: int) -> np.ndarray:
        return moving_average(self.theta, half_window)

    def interior(self, values: np.ndarray | None = None) -> np.ndarray:
        values = self.theta if values is None else values
        if self.memory == 0:
            return values
        return values[self.memory:-self.memory]


class NpnSpec(BaseModel):
    """Inputs of the NPN metric for channel ``channel`` of an M-channel grid."""
    model_config = ConfigDict(frozen=True)

    channel: int = Field(default=0, ge=0)
    n_channels: int = Field(default=1, ge=1)
    memory: int = Field(default=0, ge=0, description="N_c")
    cpr_half_window: int = Field(default=0, ge=0, description="N_CPR")
    es_n0: float = Field(description="Linear Es/N0 at the receiver")
    cpr_efficiency: float = Field(default_factory=lambda: metrics_config.cpr_efficiency)
    launch_powers_w: tuple[float, ...] = ()

    @field_validator('es_n0')
    @classmethod
    def validate_es_n0(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Es/N0 must be positive")
        return v

    @field_validator('cpr_efficiency')
    @classmethod
    def validate_efficiency(cls, v: float) -> float:
        if not 0 < v <= 1:
            raise ValueError("CPR efficiency must be in (0, 1]")
        return v

    def phi_bar(self, link: LinkSpec) -> np.ndarray:
        if len(self.launch_powers_w) != self.n_channels:
            raise MetricsError(f"Need {self.n_channels} launch powers, got {len(self.launch_powers_w)}")
        return np.array([nominal_phase_rotation(self.channel, ell, link, self.launch_powers_w)
                         for ell in range(self.n_channels)])

    @property
    def estimator_noise(self) -> float:
        """sigma_xi^2: the Cramer-Rao bound over the CPR window divided by the CPR efficiency."""
        return 1.0 / (2.0 * self.es_n0) / (2 * self.cpr_half_window + 1) / self.cpr_efficiency


def npn_phase_series(channels: list[np.ndarray], table: CoefficientTable, phi_bar: np.ndarray,
                     channel: int) -> PhaseSeries:
    """theta_i[k] = sum_l phi_bar_l sum_m C_{l-i}[m] I_l[k+m], with zero intensity outside the frame."""
    intensities = [intensity(c) for c in channels]
    length = len(intensities[0])
    if any(len(x) != length for x in intensities):
        raise MetricsError("All channels need the same number of symbols")
    if len(phi_bar) != len(channels):
        raise MetricsError(f"{len(phi_bar)} nominal rotations for {len(channels)} channels")

    theta = np.zeros(length)
    for ell, power in enumerate(intensities):
        row = table.row(ell - channel)
        contribution = np.zeros(length)
        for m in range(-row.memory, row.memory + 1):
            if abs(m) >= length:
                continue
            if m >= 0:
                contribution[:length - m] += row[m] * power[m:]
            else:
                contribution[-m:] += row[m] * power[:length + m]
        theta += phi_bar[ell] * contribution
    return PhaseSeries(theta, table.memory)


def npn_metric(series: PhaseSeries, spec: NpnSpec) -> float:
    """Var(theta - theta_hat) over interior samples plus the CPR estimator noise."""
    residual = series.interior(series.theta - series.estimate(spec.cpr_half_window))
    if len(residual) < 2:
        raise SeriesTooShortError(f"{len(residual)} interior samples; need at least 2")
    return float(np.var(residual)) + spec.estimator_noise


def npn_variance(series: PhaseSeries) -> float:
    """Var(theta) over interior samples (the metric without CPR)."""
    interior = series.interior()
    if len(interior) < 2:
        raise SeriesTooShortError(f"{len(interior)} interior samples; need at least 2")
    return float(np.var(interior))
