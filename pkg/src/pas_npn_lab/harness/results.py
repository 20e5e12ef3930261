"""
Result tables: CSV with a fixed column order, a JSON run manifest and a
long-format table of the (N, N_CPR) grid for heat maps.
"""
import json
import logging
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import pandas as pd

from pas_npn_lab.core.config import pas_config, runtime_config
from pas_npn_lab.core.errors import MetricsError
from pas_npn_lab.harness.config import ExperimentConfig, config_hash
from pas_npn_lab.harness.models import (
    COORDINATE_COLUMNS,
    LIST_COLUMNS,
    METRIC_COLUMNS,
    TEXT_COLUMNS,
    ExperimentPoint,
    PointCoordinates,
)
from pas_npn_lab.harness.runner import derive_seed
from pas_npn_lab.metrics.snr import pearson

logger = logging.getLogger(__name__)

COLUMNS = COORDINATE_COLUMNS + METRIC_COLUMNS
HEATMAP_COLUMNS = ["dm_kind", "block_length", "cpr_half_window", "launch_power_dbm", "metric", "value"]
HEATMAP_METRICS = ["air", "snr_db", "npn", "eedi"]
VERSIONED_PACKAGES = ["pas-npn-lab", "numpy", "scipy", "pandas", "pydantic"]


def results_frame(points: list[ExperimentPoint]) -> pd.DataFrame:
    """Points sorted by coordinates, columns in the fixed order."""
    ordered = sorted(points, key=lambda p: p.coordinates)
    return pd.DataFrame([p.to_record() for p in ordered], columns=COLUMNS)


def heatmap_frame(frame: pd.DataFrame) -> pd.DataFrame:
    """Long format of the optimal-power rows: one row per (DM kind, N, N_CPR, metric)."""
    optimal = frame[frame["optimal_power"].astype(bool)]
    present = [m for m in HEATMAP_METRICS if optimal[m].notna().any()]
    long = optimal.melt(id_vars=COORDINATE_COLUMNS, value_vars=present, var_name="metric", value_name="value")
    return long.sort_values(["metric"] + COORDINATE_COLUMNS, kind="stable").reset_index(drop=True)[HEATMAP_COLUMNS]


def _versions() -> dict[str, str | None]:
    versions = {}
    for package in VERSIONED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = None
    return versions


def build_manifest(points: list[ExperimentPoint], config: ExperimentConfig) -> dict:
    transmissions = sorted({p.coordinates.transmission for p in points})
    seeds = {
        f"{dm_kind.value}/N={n}/P={power:g}dBm": derive_seed(config.master_seed, PointCoordinates(dm_kind, n, 0, power))
        for dm_kind, n, power in transmissions
    }
    return {
        "name": config.name,
        "config_hash": config_hash(config),
        "master_seed": config.master_seed,
        "seeds": seeds,
        "points": len(points),
        "failed_points": sum(not p.ok for p in points),
        "columns": COLUMNS,
        "labeling": pas_config.labeling,
        "versions": _versions(),
        "config": config.model_dump(mode="json"),
    }


def emit_results(points: list[ExperimentPoint], config: ExperimentConfig,
                 out_dir: str | Path | None = None) -> dict[str, Path]:
    """Write results.csv, manifest.json and heatmap.csv under ``out_dir/<config name>``."""
    if not points:
        raise ValueError("Nothing to emit: the result table is empty")
    directory = Path(out_dir or runtime_config.out_dir) / config.name
    directory.mkdir(parents=True, exist_ok=True)

    frame = results_frame(points)
    paths = {
        "results": directory / "results.csv",
        "manifest": directory / "manifest.json",
        "heatmap": directory / "heatmap.csv",
    }
    frame.to_csv(paths["results"], index=False, float_format="%.17g")
    heatmap_frame(frame).to_csv(paths["heatmap"], index=False, float_format="%.17g")
    with open(paths["manifest"], "w") as f:
        json.dump(build_manifest(points, config), f, indent=2, sort_keys=True)
    logger.info(f"Wrote {len(frame)} points to {directory}")
    return paths


def load_results(path: str | Path) -> pd.DataFrame:
    """Read a results CSV (or the directory holding one) with exact float round trip."""
    path = Path(path)
    if path.is_dir():
        path = path / "results.csv"
    frame = pd.read_csv(path, float_precision="round_trip")
    text = list(TEXT_COLUMNS + LIST_COLUMNS)
    frame[text] = frame[text].fillna("").astype(str)
    missing = set(COLUMNS) - set(frame.columns)
    if missing:
        raise ValueError(f"{path} is not a results table; missing columns {sorted(missing)}")
    return frame[COLUMNS]


def points_from_frame(frame: pd.DataFrame) -> list[ExperimentPoint]:
    return [ExperimentPoint.from_record(record) for record in frame.to_dict(orient="records")]


@dataclass
class SweepSummary:
    best: pd.DataFrame
    shaping_gain: dict[str, float]
    correlations: dict[str, float | None]

    def format(self) -> str:
        lines = ["Best operating point per (DM kind, N):", self.best.to_string(index=False), ""]
        lines.append("Nonlinear shaping gain (peak AIR over N minus AIR at the largest N):")
        for kind, gain in self.shaping_gain.items():
            lines.append(f"  {kind}: {gain:.4f} bit/symbol/pol")
        lines.append("Correlations over all measured points:")
        for name, value in self.correlations.items():
            lines.append(f"  {name}: {'undefined' if value is None else f'{value:.3f}'}")
        return "\n".join(lines)


def _measured(frame: pd.DataFrame) -> pd.Series:
    return frame["failed_stage"].fillna("") == ""


def _correlation(frame: pd.DataFrame, metric: str) -> float | None:
    rows = frame[["snr_db", metric]].dropna()
    try:
        return pearson(rows["snr_db"].to_numpy(), -rows[metric].to_numpy())
    except MetricsError as e:
        logger.info(f"Correlation of SNR with -{metric} not available: {e}")
        return None


def summarize(frame: pd.DataFrame) -> SweepSummary:
    """Best AIR per (DM kind, N) over N_CPR and power, the nonlinear shaping gain and metric correlations."""
    measured = frame[_measured(frame) & frame["air"].notna()]
    if measured.empty:
        raise ValueError("No measured AIR in the result table")
    best_rows = measured.loc[measured.groupby(["dm_kind", "block_length"])["air"].idxmax()]
    best = best_rows[COORDINATE_COLUMNS + ["snr_db", "air", "air_half_width"]].reset_index(drop=True)

    shaping_gain = {}
    for kind, group in best.groupby("dm_kind"):
        largest = group.loc[group["block_length"].idxmax(), "air"]
        shaping_gain[str(kind)] = float(group["air"].max() - largest)

    correlations = {f"corr(SNR, -{m.upper()})": _correlation(measured, m) for m in ("npn", "eedi")}
    return SweepSummary(best, shaping_gain, correlations)


def air_interior_maximum(frame: pd.DataFrame, dm_kind: str) -> tuple[float, float, float]:
    """(peak AIR over N, AIR at the largest N, its half-width) for one DM kind at its best N_CPR and power."""
    rows = frame[(frame["dm_kind"] == dm_kind) & _measured(frame) & frame["air"].notna()]
    if rows.empty:
        raise ValueError(f"No measured points for {dm_kind}")
    best = rows.loc[rows.groupby("block_length")["air"].idxmax()].sort_values("block_length")
    largest = best.iloc[-1]
    return float(best["air"].max()), float(largest["air"]), float(largest["air_half_width"])
