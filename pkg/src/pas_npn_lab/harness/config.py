"""
Experiment descriptions loaded from YAML. A config is a path to a YAML file
or the name of a bundled preset under ``presets/``.
"""
import hashlib
import logging
from enum import StrEnum
from pathlib import Path

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from pas_npn_lab.channel.models import FiberSpan, LaserSpec, LinkSpec, StepRule, WdmGrid
from pas_npn_lab.core.config import channel_config, harness_config, metrics_config
from pas_npn_lab.cpr.models import CprKind
from pas_npn_lab.pas.mapping import MapKind
from pas_npn_lab.shaping.models import AmplitudeAlphabet, DmKind

logger = logging.getLogger(__name__)

PRESET_DIR = Path(__file__).parent / "presets"

METRICS = ("snr", "air", "npn", "eedi", "edi")


class ChannelModel(StrEnum):
    AWGN = "awgn"
    SSFM = "ssfm"


class Compensation(StrEnum):
    EDC = "edc"
    DBP = "dbp"


class LinkConfig(BaseModel):
    """Repeated SMF spans, optionally each followed by a DCF segment."""
    model_config = ConfigDict(frozen=True)

    name: str = "link"
    n_spans: int = Field(default=1, ge=1)
    smf: FiberSpan = Field(default_factory=FiberSpan.smf)
    dcf: FiberSpan | None = None
    noise_figure_db: float = 5.0
    amplified: bool = True

    def build(self) -> LinkSpec:
        common = dict(name=self.name, noise_figure_db=self.noise_figure_db, amplified=self.amplified)
        if self.dcf is not None:
            return LinkSpec.with_dcf(self.n_spans, self.smf, self.dcf, **common)
        return LinkSpec.uniform(self.n_spans, self.smf, **common)


class ExperimentConfig(BaseModel):
    """One sweep: DM kinds x block lengths x CPR windows x launch powers over one link."""
    model_config = ConfigDict(frozen=True)

    name: str
    description: str = ""
    link: LinkConfig = Field(default_factory=LinkConfig)
    grid: WdmGrid = Field(default_factory=WdmGrid)
    laser: LaserSpec = Field(default_factory=LaserSpec)
    channel_model: ChannelModel = ChannelModel.SSFM
    awgn_es_n0_db: float = Field(default=17.0, description="Es/N0 of the AWGN-only channel (dB)")
    step_rule: StepRule = Field(default_factory=StepRule)
    compensation: Compensation = Compensation.EDC

    alphabet_levels: int = Field(default=8, description="Amplitude levels per dimension (8 for 256-QAM)")
    rate_bits: float = Field(default=2.0, description="DM rate in bits per amplitude")
    shells: int = Field(default=2, ge=1, description="Shell count of SM-m")
    dm_kinds: tuple[DmKind, ...] = (DmKind.SS,)
    block_lengths: tuple[int, ...] = (64,)
    map_kind: MapKind = MapKind.PARALLEL

    cpr: CprKind = CprKind.MPR
    cpr_half_windows: tuple[int, ...] = (0,)
    launch_powers_dbm: tuple[float, ...] = (0.0,)
    refine_power: bool = False

    n_symbols: int = Field(default=8192, description="Symbols per channel and frame, guards included")
    guard_symbols: int = Field(default_factory=lambda: channel_config.guard_symbols)
    scoi: tuple[int, ...] | None = Field(default=None, description="Channels whose AIR is averaged; the centre channel when unset")
    metrics: tuple[str, ...] = METRICS
    edi_window: int = Field(default=64, ge=1)
    eedi_forgetting: float = Field(default_factory=lambda: metrics_config.eedi_forgetting)
    npn_memory: int | None = Field(default=None, description="N_c; the walk-off rule when unset")
    seed: int | None = None

    @field_validator('dm_kinds', 'block_lengths', 'cpr_half_windows', 'launch_powers_dbm', 'metrics')
    @classmethod
    def validate_non_empty(cls, v: tuple) -> tuple:
        if not v:
            raise ValueError("Sweep lists must not be empty")
        return v

    @field_validator('metrics')
    @classmethod
    def validate_metrics(cls, v: tuple[str, ...]) -> tuple[str, ...]:
        unknown = set(v) - set(METRICS)
        if unknown:
            raise ValueError(f"Unknown metrics {sorted(unknown)}; choose from {METRICS}")
        return v

    @model_validator(mode='after')
    def validate_frame(self) -> 'ExperimentConfig':
        if self.n_symbols <= 2 * self.guard_symbols + 1:
            raise ValueError(f"{self.n_symbols=} leaves no payload between the guards")
        for n in self.block_lengths:
            if self.n_symbols % n:
                raise ValueError(f"Frame of {self.n_symbols} symbols is not a multiple of N={n}")
            if self.map_kind is MapKind.SERIAL and n % 4:
                raise ValueError(f"Serial map needs N divisible by 4, got {n}")
        for channel in self.scoi or ():
            if not 0 <= channel < self.grid.n_channels:
                raise ValueError(f"SCOI channel {channel} outside the {self.grid.n_channels}-channel grid")
        if self.cpr is CprKind.MPR and self.cpr_half_windows != (0,):
            raise ValueError("MPR has no window; use cpr_half_windows: [0]")
        return self

    @property
    def alphabet(self) -> AmplitudeAlphabet:
        return AmplitudeAlphabet.ask(self.alphabet_levels)

    @property
    def link_spec(self) -> LinkSpec:
        return self.link.build()

    @property
    def channels_of_interest(self) -> tuple[int, ...]:
        return self.scoi or (self.grid.n_channels // 2,)

    @property
    def master_seed(self) -> int:
        return harness_config.master_seed if self.seed is None else self.seed

    def launch_power_w(self, power_dbm: float) -> float:
        return 1e-3 * 10 ** (power_dbm / 10.0)

    def with_overrides(self, **updates) -> 'ExperimentConfig':
        return self.model_validate(self.model_dump() | updates)


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(config.model_dump_json().encode()).hexdigest()[:16]


def list_presets() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def load_config(source: str | Path) -> ExperimentConfig:
    """Load a YAML config file, or a bundled preset by name."""
    path = Path(source)
    if not path.exists():
        preset = PRESET_DIR / f"{source}.yaml"
        if not preset.exists():
            raise FileNotFoundError(f"No config file or preset named {source!r}; presets: {list_presets()}")
        path = preset
    with open(path) as f:
        raw = yaml.safe_load(f)
    config = ExperimentConfig.model_validate(raw)
    logger.info(f"Loaded config '{config.name}' from {path}: {len(config.dm_kinds)} DM kinds, "
                f"N={list(config.block_lengths)}, {len(config.launch_powers_dbm)} powers")
    return config

