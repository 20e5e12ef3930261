"""Configuration management for the shaping lab: runtime paths and numerical defaults."""
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class ShapingConfig(BaseSettings):
    """Distribution matcher defaults."""
    model_config = SettingsConfigDict(env_prefix="PAS_NPN_SHAPING_")

    emulation_block_length: int = Field(default=512, description="Block length of the DM used to emulate longer blocks by concatenation + interleaving")
    rate_loss_tolerance: float = Field(default=1e-9, description="Numerical tolerance below which a negative rate loss is reported as zero")
    matcher_cache_size: int = Field(default=64, description="Number of built distribution matchers kept in memory")

    @field_validator('emulation_block_length')
    @classmethod
    def validate_emulation_block_length(cls, v: int) -> int:
        if v < 1:
            raise ValueError("Emulation block length must be positive")
        return v


class PasConfig(BaseSettings):
    """Constellation mapping and demapping defaults."""
    model_config = SettingsConfigDict(env_prefix="PAS_NPN_PAS_")

    llr_clip: float = Field(default=50.0, description="Absolute clipping level for log-likelihood ratios")
    labeling: str = Field(default="reflected-binary", description="Bit labeling per real dimension (sign bit followed by Gray-coded amplitude index)")
    confidence_z: float = Field(default=1.96, description="Normal quantile used for Monte-Carlo confidence half-widths")

    @field_validator('llr_clip')
    @classmethod
    def validate_llr_clip(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("LLR clip must be positive")
        return v


class ChannelConfig(BaseSettings):
    """Fiber and transceiver simulation defaults."""
    model_config = SettingsConfigDict(env_prefix="PAS_NPN_CHANNEL_")

    reference_wavelength_nm: float = Field(default=1550.0, description="Carrier wavelength used to convert D to beta2 and to compute photon energy")
    smf_step_km: float = Field(default=1.0, description="Default SSFM step on standard fibers (km)")
    dcf_step_km: float = Field(default=0.1, description="Default SSFM step on dispersion compensating fibers (km)")
    max_nonlinear_phase: float = Field(default=0.05, description="Per-step nonlinear phase above which a coarse-step warning is emitted (rad)")
    guard_symbols: int = Field(default=256, description="Symbols excluded from every metric at each frame edge")
    samples_per_symbol: int = Field(default=8, description="Oversampling factor of the WDM waveform relative to the baud rate")

    @field_validator('max_nonlinear_phase', 'smf_step_km', 'dcf_step_km')
    @classmethod
    def validate_positive(cls, v: float) -> float:
        if v <= 0:
            raise ValueError("Value must be positive")
        return v


class CprConfig(BaseSettings):
    """Carrier phase recovery defaults."""
    model_config = SettingsConfigDict(env_prefix="PAS_NPN_CPR_")

    test_phases: int = Field(default=64, description="Number of BPS test phases over the pi/2 ambiguity interval")
    cycle_slip_block: int = Field(default=64, description="Block length of the supervised cycle-slip compensation (symbols)")

    @field_validator('test_phases')
    @classmethod
    def validate_test_phases(cls, v: int) -> int:
        if v < 2:
            raise ValueError("BPS needs at least two test phases")
        return v


class MetricsConfig(BaseSettings):
    """Defaults for the NPN model and the dispersion indices."""
    model_config = SettingsConfigDict(env_prefix="PAS_NPN_METRICS_")

    cpr_efficiency: float = Field(default=0.008, description="CPR efficiency e_CPR scaling the Cramer-Rao noise floor")
    eedi_forgetting: float = Field(default=0.985, description="Forgetting factor of the exponentially weighted energy dispersion index")
    eedi_truncation: float = Field(default=1e-6, description="Weight below which EEDI taps are truncated")
    quadrature_rtol: float = Field(default=1e-6, description="Relative tolerance of the kernel coefficient quadrature")
    quadrature_order: int = Field(default=16, description="Initial Gauss-Legendre order per panel and dimension")
    quadrature_max_panels: int = Field(default=64, description="Maximum number of panels per dimension before giving up")
    quadrature_attempts: int = Field(default=3, description="Quadrature attempts, doubling the Gauss order each time")
    residual_tolerance: float = Field(default=1e-6, description="Imaginary residual (relative to peak |C|) above which coefficients are flagged")
    memory_margin: int = Field(default=4, description="Symbols added to the walk-off memory estimate N_c")
    snr_cap_db: float = Field(default=100.0, description="Upper cap for the effective SNR estimate (dB)")

    @field_validator('cpr_efficiency')
    @classmethod
    def validate_cpr_efficiency(cls, v: float) -> float:
        if not 0 < v <= 1:
            raise ValueError("CPR efficiency must be in (0, 1]")
        return v

    @field_validator('eedi_forgetting')
    @classmethod
    def validate_forgetting(cls, v: float) -> float:
        if not 0 <= v <= 1:
            raise ValueError("Forgetting factor must be between 0 and 1")
        return v


class HarnessConfig(BaseSettings):
    """Experiment driver defaults."""
    model_config = SettingsConfigDict(env_prefix="PAS_NPN_HARNESS_")

    workers: int = Field(default=1, description="Maximum number of experiment points evaluated concurrently")
    point_timeout: float = Field(default=6 * 3600.0, description="Timeout for a single experiment point (seconds)")
    refine_step_db: float = Field(default=0.5, description="Launch power refinement step around the coarse optimum (dB)")
    master_seed: int = Field(default=2024, description="Master seed used when a config does not set one")


class RuntimeConfig(BaseSettings):
    """Configuration for logging and runtime directories."""
    model_config = SettingsConfigDict(env_prefix="PAS_NPN_")

    log_level: str = Field(default="INFO", description="Logging level")
    log_dir: str = Field(default="runtime/logs", description="Logging directory")
    log_file: str = Field(default="runtime/logs/pas_npn_lab.log", description="Logging file")
    out_dir: str = Field(default="runtime/results", description="Directory receiving result tables and manifests")
    cache_dir: str = Field(default="runtime/kernel_cache", description="Directory of cached kernel coefficient tables")

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        v = v.upper()
        if v not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level {v}")
        return v


shaping_config = ShapingConfig()
pas_config = PasConfig()
channel_config = ChannelConfig()
cpr_config = CprConfig()
metrics_config = MetricsConfig()
harness_config = HarnessConfig()
runtime_config = RuntimeConfig()
