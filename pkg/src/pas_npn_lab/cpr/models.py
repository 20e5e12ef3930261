"""Carrier phase recovery configuration and phase tracks."""
import logging
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from pas_npn_lab.core.config import cpr_config

logger = logging.getLogger(__name__)


class CprKind(StrEnum):
    MPR = "mpr"
    BPS = "bps"


class CprSpec(BaseModel):
    """MPR (data-aided global phase) or BPS over a window of 2 * half_window + 1 symbols."""
    model_config = ConfigDict(frozen=True)

    kind: CprKind = CprKind.BPS
    half_window: int = Field(default=24, ge=0, description="N_CPR: symbols on each side of the BPS window")
    test_phases: int = Field(default_factory=lambda: cpr_config.test_phases, description="Number of BPS test phases")
    phase_range: float = Field(default=np.pi / 2, description="Interval spanned by the BPS test phases (rad)")
    fix_cycle_slips: bool = Field(default=True, description="Run supervised cycle-slip compensation after BPS")

    @model_validator(mode='after')
    def validate_bps(self) -> 'CprSpec':
        if self.kind is CprKind.BPS and self.test_phases < 2:
            raise ValueError("BPS needs at least two test phases")
        return self

    @classmethod
    def mpr(cls) -> 'CprSpec':
        return cls(kind=CprKind.MPR, half_window=0)

    @classmethod
    def bps(cls, half_window: int, test_phases: int | None = None) -> 'CprSpec':
        if test_phases is None:
            return cls(kind=CprKind.BPS, half_window=half_window)
        return cls(kind=CprKind.BPS, half_window=half_window, test_phases=test_phases)

    @property
    def label(self) -> str:
        return "MPR" if self.kind is CprKind.MPR else f"BPS-{self.half_window}"

    def test_grid(self) -> np.ndarray:
        b = np.arange(self.test_phases)
        return (b / self.test_phases - 0.5) * self.phase_range


@dataclass
class PhaseTrack:
    """Per-symbol phase estimate, shape (P, T); MPR tracks are constant along T."""
    phase: np.ndarray
    spec: CprSpec

    def __post_init__(self):
        self.phase = np.atleast_2d(np.asarray(self.phase, dtype=float))

    def to_csv(self, path: str | Path) -> None:
        columns = ["phase_x", "phase_y"] if self.phase.shape[0] == 2 else [f"phase_{i}" for i in range(self.phase.shape[0])]
        frame = pd.DataFrame(self.phase.T, columns=columns)
        frame.index.name = "symbol"
        frame.to_csv(path, float_format="%.17g")
        logger.debug(f"Wrote {self.spec.label} phase track to {path}")
