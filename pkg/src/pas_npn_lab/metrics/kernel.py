"""
Interaction kernel of a dispersion-unmanaged link and the real memory
coefficients C_n[m] that weight neighbouring symbol intensities in the
nonlinear phase model.
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy.special import roots_legendre
from tenacity import Retrying, before_sleep_log, retry_if_exception_type, stop_after_attempt, wait_none

from pas_npn_lab.channel.models import LinkSpec
from pas_npn_lab.core.config import metrics_config, runtime_config
from pas_npn_lab.core.errors import KernelAccuracyError, UnsupportedLinkError

logger = logging.getLogger(__name__)

CACHE_COLUMNS = ["n", "m", "C", "residual"]


def _uniform_span(link: LinkSpec):
    if not link.is_uniform:
        raise UnsupportedLinkError(
            f"Link '{link.name}' is not made of identical spans; the analytic kernel does not cover it"
        )
    return link.spans[0]


def interaction_kernel(mu, nu, link: LinkSpec) -> np.ndarray:
    """
    K(mu, nu) for frequencies in Hz; equals 1 whenever beta2 * nu * (nu - mu) = 0.

    The per-span factor uses expm1 and the span array factor is summed as a
    geometric series, so the removable singularities need no special casing.
    """
    span = _uniform_span(link)
    n_spans = len(link.spans)
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    length = span.length_km
    b = 4.0 * np.pi ** 2 * span.beta2 * nu * (nu - mu)
    z = -span.alpha + 1j * b

    small = np.abs(z) * length < 1e-12
    safe_z = np.where(small, 1.0, z)
    single_span = np.where(small, length * (1.0 + z * length / 2.0), np.expm1(z * length) / safe_z)

    phase_step = np.exp(1j * b * length)
    array_factor = np.zeros(np.broadcast(mu, nu).shape, dtype=complex)
    term = np.ones_like(array_factor)
    for _ in range(n_spans):
        array_factor += term
        term = term * phase_step

    return single_span * array_factor / (n_spans * span.effective_length)


@dataclass(frozen=True)
class KernelCoefficients:
    """C_n[m] for m = -n_c .. n_c, with the discarded imaginary residual relative to max |C|."""
    offset: int
    values: np.ndarray = field(repr=False)
    residual: float = 0.0

    @property
    def memory(self) -> int:
        return (len(self.values) - 1) // 2

    @property
    def flagged(self) -> bool:
        return self.residual > metrics_config.residual_tolerance

    def __getitem__(self, m: int) -> float:
        if abs(m) > self.memory:
            return 0.0
        return float(self.values[m + self.memory])


@dataclass
class CoefficientTable:
    """Coefficient rows for several channel offsets n = l - i."""
    symbol_period: float
    rows: dict[int, KernelCoefficients]

    @property
    def memory(self) -> int:
        return max(row.memory for row in self.rows.values())

    def row(self, offset: int) -> KernelCoefficients:
        if offset not in self.rows:
            raise KeyError(f"No coefficients for channel offset {offset}")
        return self.rows[offset]

    def to_frame(self) -> pd.DataFrame:
        records = []
        for offset, row in sorted(self.rows.items()):
            for m in range(-row.memory, row.memory + 1):
                records.append({"n": offset, "m": m, "C": row[m], "residual": row.residual})
        return pd.DataFrame.from_records(records, columns=CACHE_COLUMNS)

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, symbol_period: float) -> 'CoefficientTable':
        rows = {}
        for offset, group in frame.groupby("n"):
            group = group.sort_values("m")
            rows[int(offset)] = KernelCoefficients(int(offset), group["C"].to_numpy(), float(group["residual"].iloc[0]))
        return cls(symbol_period, rows)


def walk_off_memory(link: LinkSpec, symbol_period: float, max_separation_hz: float = 0.0,
                    margin: int | None = None) -> int:
    """N_c from the walk-off over the link between the farthest frequency components, plus a margin."""
    margin = metrics_config.memory_margin if margin is None else margin
    bandwidth = max(max_separation_hz, 1.0 / symbol_period)
    walk_off = abs(link.accumulated_beta2) * 2.0 * np.pi * bandwidth
    return int(math.ceil(walk_off / symbol_period - 1e-12)) + margin


def _gauss_nodes(lo: float, hi: float, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule; panel edges always include 0 when it lies inside the band."""
    edges = np.linspace(lo, hi, panels + 1)
    if lo < 0.0 < hi:
        edges = np.unique(np.append(edges, 0.0))
    x, w = roots_legendre(order)
    half = np.diff(edges) / 2.0
    mid = (edges[1:] + edges[:-1]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _band_integral(link: LinkSpec, symbol_period: float, memory: int,
                   nodes: np.ndarray, weights: np.ndarray) -> np.ndarray:
    m = np.arange(-memory, memory + 1)[:, None]
    kernel = interaction_kernel(nodes[:, None], nodes[None, :], link)
    left = weights[None, :] * np.exp(-2j * np.pi * m * nodes[None, :] * symbol_period)
    right = weights[None, :] * np.exp(2j * np.pi * m * nodes[None, :] * symbol_period)
    return symbol_period ** 2 * np.einsum("mq,qr,mr->m", left, kernel, right)


def _integrate(link: LinkSpec, symbol_period: float, memory: int, centre: float, order: int,
               rtol: float, max_panels: int) -> np.ndarray:
    lo = centre - 0.5 / symbol_period
    hi = centre + 0.5 / symbol_period
    previous = None
    achieved = math.inf
    panels = 2
    while panels <= max_panels:
        nodes, weights = _gauss_nodes(lo, hi, panels, order)
        values = _band_integral(link, symbol_period, memory, nodes, weights)
        if previous is not None:
            scale = max(float(np.max(np.abs(values))), 1e-300)
            achieved = float(np.max(np.abs(values - previous))) / scale
            if achieved <= rtol:
                logger.debug(f"Kernel band at {centre / 1e9:.2f} GHz converged with {panels} panels x {order} nodes")
                return values
        previous = values
        panels *= 2
    raise KernelAccuracyError(f"Quadrature did not reach {rtol=} with {order=}", achieved=achieved)


def compute_coefficients(link: LinkSpec, symbol_period: float, memory: int, offset: int = 0,
                         spacing_hz: float | None = None, rtol: float | None = None) -> KernelCoefficients:
    """
    Integrate the kernel over the 1/T-wide band centred at offset * spacing
    (spacing defaults to 1/T). Non-convergence is retried with a doubled
    Gauss order before the accuracy error propagates.
    """
    if symbol_period <= 0:
        raise ValueError(f"{symbol_period=} must be positive")
    if memory < 0:
        raise ValueError(f"{memory=} must be non-negative")
    _uniform_span(link)
    rtol = rtol or metrics_config.quadrature_rtol
    spacing_hz = spacing_hz or 1.0 / symbol_period
    centre = offset * spacing_hz

    for attempt in Retrying(
        stop=stop_after_attempt(metrics_config.quadrature_attempts),
        retry=retry_if_exception_type(KernelAccuracyError),
        wait=wait_none(),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    ):
        with attempt:
            order = metrics_config.quadrature_order * 2 ** (attempt.retry_state.attempt_number - 1)
            values = _integrate(link, symbol_period, memory, centre, order, rtol, metrics_config.quadrature_max_panels)

    peak = max(float(np.max(np.abs(values.real))), 1e-300)
    residual = float(np.max(np.abs(values.imag))) / peak
    coefficients = KernelCoefficients(offset, values.real.copy(), residual)
    if coefficients.flagged:
        logger.warning(f"Kernel row n={offset} has imaginary residual {residual:.2e} above tolerance")
    return coefficients


def coefficient_table(link: LinkSpec, symbol_period: float, memory: int, offsets,
                      spacing_hz: float | None = None) -> CoefficientTable:
    rows = {int(n): compute_coefficients(link, symbol_period, memory, int(n), spacing_hz) for n in sorted(set(offsets))}
    logger.info(f"Computed {len(rows)} kernel rows for '{link.name}' with N_c={memory}")
    return CoefficientTable(symbol_period, rows)


class KernelCache:
    """CSV files of coefficient tables keyed by a hash of the link and the quadrature settings."""

    def __init__(self, directory: str | Path | None = None):
        self.directory = Path(directory or runtime_config.cache_dir)

    def key(self, link: LinkSpec, symbol_period: float, memory: int, offsets, spacing_hz: float | None = None) -> str:
        payload = {
            "link": link.model_dump(mode="json"),
            "symbol_period": symbol_period,
            "memory": memory,
            "offsets": sorted(int(n) for n in set(offsets)),
            "spacing_hz": spacing_hz,
            "rtol": metrics_config.quadrature_rtol,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]

    def path_for(self, key: str) -> Path:
        return self.directory / f"kernel_{key}.csv"

    def get(self, link: LinkSpec, symbol_period: float, memory: int, offsets,
            spacing_hz: float | None = None) -> CoefficientTable:
        key = self.key(link, symbol_period, memory, offsets, spacing_hz)
        path = self.path_for(key)
        if path.exists():
            logger.info(f"Kernel cache hit {path.name}")
            frame = pd.read_csv(path, float_precision="round_trip")
            return CoefficientTable.from_frame(frame, symbol_period)

        logger.info(f"Kernel cache miss {path.name}, computing")
        table = coefficient_table(link, symbol_period, memory, offsets, spacing_hz)
        self.directory.mkdir(parents=True, exist_ok=True)
        table.to_frame().to_csv(path, index=False, float_format="%.17g")
        return table
