"""
Fiber, link, WDM grid and laser records plus the dual-polarization waveform
container. Records use units in their key names (km, dB/km, ps/nm/km,
1/W/km, GHz, GBd); derived SI quantities are exposed as properties.
"""
import hashlib
import json
import logging
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.constants import c as SPEED_OF_LIGHT, h as PLANCK

from pas_npn_lab.core.config import channel_config
from pas_npn_lab.core.errors import ChannelConfigError

logger = logging.getLogger(__name__)


class FiberKind(StrEnum):
    SMF = "smf"
    DCF = "dcf"


class FiberSpan(BaseModel):
    """One fiber segment followed by an EDFA."""
    model_config = ConfigDict(frozen=True)

    kind: FiberKind = FiberKind.SMF
    length_km: float = Field(description="Segment length (km)")
    attenuation_db_km: float = Field(default=0.2, description="Power attenuation (dB/km)")
    dispersion_ps_nm_km: float = Field(default=17.0, description="Dispersion parameter D (ps/nm/km)")
    beta2_ps2_km: float | None = Field(default=None, description="GVD parameter overriding D when set (ps^2/km)")
    gamma_w_km: float = Field(default=1.3, description="Kerr nonlinear coefficient (1/W/km)")
    launch_offset_db: float = Field(default=0.0, description="Launch power of this segment relative to the SMF launch power (dB)")
    step_km: float | None = Field(default=None, description="SSFM step override (km)")

    @field_validator('length_km')
    @classmethod
    def validate_length(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Span length must be positive")
        return v

    @field_validator('attenuation_db_km')
    @classmethod
    def validate_attenuation(cls, v: float) -> float:
        if v < 0:
            raise ValueError("Attenuation must be non-negative")
        return v

    @classmethod
    def smf(cls, length_km: float = 80.0, **overrides) -> 'FiberSpan':
        return cls(kind=FiberKind.SMF, length_km=length_km, **overrides)

    @classmethod
    def dcf(cls, length_km: float = 13.0, **overrides) -> 'FiberSpan':
        values = dict(attenuation_db_km=0.57, beta2_ps2_km=127.5, gamma_w_km=6.5, launch_offset_db=-4.0)
        values.update(overrides)
        return cls(kind=FiberKind.DCF, length_km=length_km, **values)

    @property
    def alpha(self) -> float:
        """Power attenuation (1/km)."""
        return self.attenuation_db_km * np.log(10.0) / 10.0

    @property
    def beta2(self) -> float:
        """GVD (s^2/km)."""
        if self.beta2_ps2_km is not None:
            return self.beta2_ps2_km * 1e-24
        wavelength = channel_config.reference_wavelength_nm * 1e-9
        d_s_m_km = self.dispersion_ps_nm_km * 1e-3
        return -d_s_m_km * wavelength ** 2 / (2.0 * np.pi * SPEED_OF_LIGHT)

    @property
    def loss_db(self) -> float:
        return self.attenuation_db_km * self.length_km

    @property
    def effective_length(self) -> float:
        """(1 - exp(-alpha L)) / alpha in km, L for a lossless span."""
        if self.alpha == 0:
            return self.length_km
        return -np.expm1(-self.alpha * self.length_km) / self.alpha

    @property
    def default_step_km(self) -> float:
        if self.step_km is not None:
            return self.step_km
        return channel_config.dcf_step_km if self.kind is FiberKind.DCF else channel_config.smf_step_km


class LinkSpec(BaseModel):
    """Ordered fiber segments, each followed by an EDFA restoring the next segment's launch power."""
    model_config = ConfigDict(frozen=True)

    name: str = "link"
    spans: tuple[FiberSpan, ...]
    noise_figure_db: float = Field(default=5.0, description="EDFA noise figure (dB)")
    amplified: bool = Field(default=True, description="Whether an EDFA follows every segment")

    @field_validator('spans')
    @classmethod
    def validate_spans(cls, v: tuple[FiberSpan, ...]) -> tuple[FiberSpan, ...]:
        if not v:
            raise ValueError("A link needs at least one span")
        return v

    @model_validator(mode='after')
    def validate_gains(self) -> 'LinkSpec':
        if self.amplified:
            for gain in self.amplifier_gains_db():
                if gain < 0:
                    raise ValueError(f"Negative EDFA gain {gain:.2f} dB; check launch offsets")
        return self

    @classmethod
    def uniform(cls, n_spans: int, span: FiberSpan | None = None, **kwargs) -> 'LinkSpec':
        span = span or FiberSpan.smf()
        return cls(spans=(span,) * n_spans, **kwargs)

    @classmethod
    def with_dcf(cls, n_spans: int, smf: FiberSpan | None = None, dcf: FiberSpan | None = None, **kwargs) -> 'LinkSpec':
        """SMF spans each followed by a DCF, with an extra EDFA before every DCF."""
        smf = smf or FiberSpan.smf()
        dcf = dcf or FiberSpan.dcf()
        return cls(spans=(smf, dcf) * n_spans, **kwargs)

    @property
    def dispersion_managed(self) -> bool:
        return any(s.kind is FiberKind.DCF for s in self.spans)

    @property
    def is_uniform(self) -> bool:
        return all(s == self.spans[0] for s in self.spans) and not self.dispersion_managed

    @property
    def total_length_km(self) -> float:
        return sum(s.length_km for s in self.spans)

    @property
    def accumulated_beta2(self) -> float:
        """Sum of beta2 * L over all segments (s^2)."""
        return sum(s.beta2 * s.length_km for s in self.spans)

    def amplifier_gains_db(self) -> list[float]:
        """Gain of the EDFA after each segment: segment loss plus the change of launch offset."""
        gains = []
        for i, span in enumerate(self.spans):
            following = self.spans[(i + 1) % len(self.spans)]
            gains.append(span.loss_db + following.launch_offset_db - span.launch_offset_db)
        return gains

    def stable_hash(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode()).hexdigest()[:16]


class WdmGrid(BaseModel):
    """Channel grid; centre frequencies are symmetric about 0."""
    model_config = ConfigDict(frozen=True)

    n_channels: int = Field(default=3, description="Number of WDM channels")
    spacing_ghz: float = Field(default=18.0, description="Channel spacing (GHz)")
    baud_gbd: float = Field(default=10.0, description="Symbol rate per channel (GBd)")
    rolloff: float = Field(default=0.1, description="RRC rolloff")
    samples_per_symbol: int = Field(default_factory=lambda: channel_config.samples_per_symbol, description="Simulation oversampling relative to the baud rate")

    @model_validator(mode='after')
    def validate_grid(self) -> 'WdmGrid':
        if self.n_channels < 1:
            raise ValueError("At least one channel is needed")
        if not 0 <= self.rolloff <= 1:
            raise ValueError(f"Rolloff {self.rolloff} outside [0, 1]")
        if self.n_channels > 1 and self.spacing_ghz < (1 + self.rolloff) * self.baud_gbd - 1e-9:
            raise ValueError("Channel spacing is below the RRC bandwidth (1 + rolloff) * baud")
        return self

    @property
    def baud(self) -> float:
        return self.baud_gbd * 1e9

    @property
    def spacing(self) -> float:
        return self.spacing_ghz * 1e9

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.baud

    @property
    def sample_rate(self) -> float:
        return self.samples_per_symbol * self.baud

    @property
    def center_frequencies(self) -> np.ndarray:
        offsets = np.arange(self.n_channels) - (self.n_channels - 1) / 2.0
        return offsets * self.spacing

    @property
    def max_separation(self) -> float:
        return (self.n_channels - 1) * self.spacing

    def check_bandwidth(self) -> None:
        occupied = self.max_separation / 2.0 + (1.0 + self.rolloff) * self.baud / 2.0
        if occupied > self.sample_rate / 2.0:
            raise ChannelConfigError(
                f"WDM band +/-{occupied / 1e9:.1f} GHz aliases at sample rate {self.sample_rate / 1e9:.1f} GHz"
            )


class LaserSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    tx_linewidth_hz: float = Field(default=0.0, description="Transmitter laser linewidth (Hz)")
    rx_linewidth_hz: float = Field(default=0.0, description="Local oscillator linewidth (Hz)")

    @field_validator('tx_linewidth_hz', 'rx_linewidth_hz')
    @classmethod
    def validate_linewidth(cls, v: float) -> float:
        if v < 0:
            raise ValueError("Linewidth must be non-negative")
        return v

    @property
    def enabled(self) -> bool:
        return self.tx_linewidth_hz > 0 or self.rx_linewidth_hz > 0


class StepMode(StrEnum):
    FIXED = "fixed"
    ADAPTIVE = "adaptive"


class StepRule(BaseModel):
    """SSFM step selection: fixed per fiber kind, or shortened to bound the nonlinear phase."""
    model_config = ConfigDict(frozen=True)

    mode: StepMode = StepMode.FIXED
    max_nonlinear_phase: float = Field(default_factory=lambda: channel_config.max_nonlinear_phase)
    step_scale: float = Field(default=1.0, description="Multiplier of the per-fiber default step (step-halving checks)")

    @field_validator('max_nonlinear_phase', 'step_scale')
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Value must be positive")
        return v


@dataclass
class WaveformGrid:
    """Two polarizations (x, y) of complex baseband samples in sqrt(W)."""
    samples: np.ndarray
    sample_rate: float
    power_scale_w: float = 1.0
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.atleast_2d(np.asarray(self.samples, dtype=complex))
        if self.samples.shape[0] != 2:
            raise ChannelConfigError(f"Expected two polarizations, got shape {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ChannelConfigError("Waveform has non-finite samples")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def angular_frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n_samples, 1.0 / self.sample_rate)

    def power(self) -> float:
        """Average total power of both polarizations (W)."""
        return float(np.mean(np.sum(np.abs(self.samples) ** 2, axis=0)))

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2))

    def replace(self, samples: np.ndarray) -> 'WaveformGrid':
        return WaveformGrid(samples, self.sample_rate, self.power_scale_w, list(self.warnings))

    def warn(self, message: str) -> None:
        logger.warning(message)
        self.warnings.append(message)

    def save(self, path: str | Path) -> None:
        header = {"sample_rate": self.sample_rate, "length": self.n_samples, "polarizations": ["x", "y"],
                  "power_scale_w": self.power_scale_w}
        np.savez(path, samples=self.samples, header=json.dumps(header))

    @classmethod
    def load(cls, path: str | Path) -> 'WaveformGrid':
        with np.load(path) as data:
            header = json.loads(str(data["header"]))
            return cls(data["samples"], header["sample_rate"], header["power_scale_w"])


def photon_energy() -> float:
    """h * nu at the reference wavelength (J)."""
    return PLANCK * SPEED_OF_LIGHT / (channel_config.reference_wavelength_nm * 1e-9)
