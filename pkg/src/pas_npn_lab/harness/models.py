"""
Sweep coordinates and per-point results.
"""
import math
from dataclasses import asdict, dataclass, field

from pas_npn_lab.shaping.models import DmKind

COORDINATE_COLUMNS = ["dm_kind", "block_length", "cpr_half_window", "launch_power_dbm"]
METRIC_COLUMNS = [
    "snr_db", "air", "air_half_width", "npn", "eedi", "edi",
    "runtime_s", "optimal_power", "failed_stage", "error", "failed_metrics", "warnings",
]
TEXT_COLUMNS = ("failed_stage", "error")
LIST_COLUMNS = ("failed_metrics", "warnings")


@dataclass(frozen=True, order=True)
class PointCoordinates:
    """Position of one point in the sweep; the field order is the sort order of result tables."""
    dm_kind: DmKind
    block_length: int
    cpr_half_window: int
    launch_power_dbm: float

    def as_dict(self) -> dict:
        return {
            "dm_kind": self.dm_kind.value,
            "block_length": self.block_length,
            "cpr_half_window": self.cpr_half_window,
            "launch_power_dbm": self.launch_power_dbm,
        }

    @property
    def transmission(self) -> tuple[DmKind, int, float]:
        """Coordinates that fix the transmitted waveform (every CPR window shares it)."""
        return self.dm_kind, self.block_length, self.launch_power_dbm


@dataclass
class ExperimentPoint:
    """
    Measured and predicted metrics of one point. Metrics that were not
    requested stay NaN; a point whose chain failed carries the stage tag.
    """
    coordinates: PointCoordinates
    snr_db: float = math.nan
    air: float = math.nan
    air_half_width: float = math.nan
    npn: float = math.nan
    eedi: float = math.nan
    edi: float = math.nan
    runtime_s: float = 0.0
    optimal_power: bool = False
    failed_stage: str | None = None
    error: str | None = None
    failed_metrics: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @classmethod
    def measured(cls, coordinates: PointCoordinates, runtime_s: float, warnings: list[str] | None = None,
                 failed_metrics: list[str] | None = None, **metrics: float) -> 'ExperimentPoint':
        return cls(coordinates=coordinates, runtime_s=runtime_s, warnings=list(warnings or []),
                   failed_metrics=list(failed_metrics or []), **metrics)

    @classmethod
    def failed(cls, coordinates: PointCoordinates, stage: str, error: str, runtime_s: float = 0.0) -> 'ExperimentPoint':
        return cls(coordinates=coordinates, runtime_s=runtime_s, failed_stage=stage, error=error)

    @property
    def ok(self) -> bool:
        return self.failed_stage is None

    def to_record(self) -> dict:
        record = self.coordinates.as_dict()
        values = asdict(self)
        for name in METRIC_COLUMNS:
            record[name] = values[name]
        for name in TEXT_COLUMNS:
            record[name] = values[name] or ""
        for name in LIST_COLUMNS:
            record[name] = "; ".join(values[name])
        return record

    @classmethod
    def from_record(cls, record: dict) -> 'ExperimentPoint':
        """Inverse of to_record; also accepts rows read back by pandas (NaN for empty text)."""
        coordinates = PointCoordinates(
            DmKind(record["dm_kind"]),
            int(record["block_length"]),
            int(record["cpr_half_window"]),
            float(record["launch_power_dbm"]),
        )
        values = {}
        for name in METRIC_COLUMNS:
            value = record.get(name)
            if name in LIST_COLUMNS:
                value = [v for v in value.split("; ") if v] if isinstance(value, str) else []
            elif name in TEXT_COLUMNS:
                value = value if isinstance(value, str) and value else None
            elif name == "optimal_power":
                value = bool(value)
            else:
                value = float(value)
            values[name] = value
        return cls(coordinates=coordinates, **values)
