"""
Experiment driver: one transmission per (DM kind, N, launch power) through
TX, fiber and RX DSP, then CPR and metrics for every N_CPR of the sweep.
"""
import asyncio
import hashlib
import json
import logging
import math
import time
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from itertools import product

import numpy as np

from pas_npn_lab.channel.fiber import dbp_single_channel, edc, propagate_link
from pas_npn_lab.channel.filters import channel_offset, matched_filter, rrc_shape, sample_symbols, wdm_demux, wdm_mux
from pas_npn_lab.channel.laser import apply_laser_phase_noise
from pas_npn_lab.core.config import harness_config
from pas_npn_lab.core.errors import MetricsError, StageError
from pas_npn_lab.cpr.models import CprKind, CprSpec
from pas_npn_lab.cpr.recovery import cycle_slip_fix, recover_carrier
from pas_npn_lab.harness.async_utils import async_consumer_with_task_group_and_result_processor, new_work_queue
from pas_npn_lab.harness.config import ChannelModel, Compensation, ExperimentConfig
from pas_npn_lab.harness.models import ExperimentPoint, PointCoordinates
from pas_npn_lab.metrics.dispersion import edi, eedi
from pas_npn_lab.metrics.information import air_bmd
from pas_npn_lab.metrics.kernel import CoefficientTable, KernelCache, walk_off_memory
from pas_npn_lab.metrics.npn import NpnSpec, normalize_power, npn_metric, npn_phase_series
from pas_npn_lab.metrics.snr import effective_snr
from pas_npn_lab.pas.constellation import QamConstellation
from pas_npn_lab.pas.demapper import demap_bit_metrics, transmitted_bits
from pas_npn_lab.pas.mapping import SignSource, map_blocks
from pas_npn_lab.shaping.emulation import base_spec_for, draw_amplitude_stream
from pas_npn_lab.shaping.models import DmKind
from pas_npn_lab.shaping.statistics import image_marginal, rate_matched_spec

logger = logging.getLogger(__name__)

STREAMS = ("dm", "signs", "ase", "tx_laser", "rx_laser", "awgn")


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Tag any failure inside the block with the stage it happened in."""
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


def derive_seed(master_seed: int, coordinates: PointCoordinates) -> int:
    """
    Stable 64-bit seed of one transmission. N_CPR is left out so every CPR
    window of a sweep sees the same received symbols.
    """
    payload = json.dumps({
        "master_seed": master_seed,
        "dm_kind": coordinates.dm_kind.value,
        "block_length": coordinates.block_length,
        "launch_power_dbm": coordinates.launch_power_dbm,
    }, sort_keys=True)
    return int.from_bytes(hashlib.sha256(payload.encode()).digest()[:8], "big")


def point_streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STREAMS))
    return {name: np.random.Generator(np.random.Philox(child)) for name, child in zip(STREAMS, children)}


@dataclass
class Transmission:
    """Symbols of one transmission after RX DSP, before CPR; guards already removed."""
    config: ExperimentConfig
    dm_kind: DmKind
    block_length: int
    launch_power_dbm: float
    constellation: QamConstellation
    priors: np.ndarray
    scale: float
    sent: list[np.ndarray]
    received: dict[int, np.ndarray]
    warnings: list[str] = field(default_factory=list)

    def coordinates(self, cpr_half_window: int) -> PointCoordinates:
        return PointCoordinates(self.dm_kind, self.block_length, cpr_half_window, self.launch_power_dbm)


def kernel_memory(config: ExperimentConfig) -> int:
    if config.npn_memory is not None:
        return config.npn_memory
    return walk_off_memory(config.link_spec, config.grid.symbol_period, config.grid.max_separation)


def kernel_table(config: ExperimentConfig, cache: KernelCache | None = None) -> CoefficientTable:
    """Coefficients for every channel offset of the grid, through the on-disk cache."""
    cache = cache or KernelCache()
    m = config.grid.n_channels
    return cache.get(config.link_spec, config.grid.symbol_period, kernel_memory(config),
                     range(-(m - 1), m), spacing_hz=config.grid.spacing)


def _transmit_symbols(config: ExperimentConfig, dm_kind: DmKind, block_length: int,
                      streams: dict[str, np.random.Generator]):
    alphabet = config.alphabet
    spec = rate_matched_spec(dm_kind, alphabet, block_length, config.rate_bits, config.shells)
    base, _ = base_spec_for(spec)
    priors = image_marginal(base)
    constellation = QamConstellation(alphabet)
    scale = constellation.scale_for(priors)
    n_blocks = 4 * config.n_symbols // block_length
    signs = SignSource(streams["signs"])
    sent = []
    for _ in range(config.grid.n_channels):
        amplitudes = draw_amplitude_stream(spec, n_blocks, streams["dm"])
        frame = map_blocks(config.map_kind, amplitudes, signs.signs(amplitudes.shape), scale)
        sent.append(frame.polarizations())
    logger.debug(f"TX {spec.label}: {config.grid.n_channels} channels x {config.n_symbols} symbols")
    return constellation, priors, scale, sent


def _through_fiber(config: ExperimentConfig, sent: list[np.ndarray], power_w: float,
                   streams: dict[str, np.random.Generator]) -> tuple[dict[int, np.ndarray], list[str]]:
    grid, link, laser = config.grid, config.link_spec, config.laser
    period = 1.0 / grid.sample_rate
    waveforms = []
    gains = []
    with stage("tx"):
        for symbols in sent:
            waveform = rrc_shape(symbols, grid.rolloff, grid.samples_per_symbol, grid.baud)
            gain = math.sqrt(power_w / waveform.power())
            gains.append(gain)
            waveform = waveform.replace(gain * waveform.samples)
            waveforms.append(apply_laser_phase_noise(waveform, laser.tx_linewidth_hz, period, streams["tx_laser"]))
        launched = wdm_mux(waveforms, grid)
    with stage("channel"):
        output = propagate_link(launched, link, config.step_rule, streams["ase"])

    received = {}
    with stage("rx"):
        for i in config.channels_of_interest:
            waveform = wdm_demux(output, grid, i)
            offset = channel_offset(grid, i, waveform.n_samples)
            if config.compensation is Compensation.DBP:
                waveform = dbp_single_channel(waveform, link, step_rule=config.step_rule, frequency_offset=offset)
            else:
                waveform = edc(waveform, link, offset)
            waveform = apply_laser_phase_noise(waveform, laser.rx_linewidth_hz, period, streams["rx_laser"])
            waveform = matched_filter(waveform, grid.baud, grid.rolloff)
            received[i] = sample_symbols(waveform, grid.baud) / gains[i]
    return received, list(output.warnings)


def _through_awgn(config: ExperimentConfig, sent: list[np.ndarray],
                  streams: dict[str, np.random.Generator]) -> dict[int, np.ndarray]:
    noise_variance = 10 ** (-config.awgn_es_n0_db / 10.0)
    linewidth = config.laser.tx_linewidth_hz + config.laser.rx_linewidth_hz
    received = {}
    for i in config.channels_of_interest:
        rng = streams["awgn"]
        noise = np.sqrt(noise_variance / 2) * (rng.standard_normal(sent[i].shape) + 1j * rng.standard_normal(sent[i].shape))
        received[i] = apply_laser_phase_noise(sent[i] + noise, linewidth, config.grid.symbol_period, streams["rx_laser"])
    return received


def _normalize_gain(received: np.ndarray, sent: np.ndarray) -> np.ndarray:
    """Remove the per-polarization amplitude gain; the phase is left to CPR."""
    gain = np.abs(np.sum(received * np.conj(sent), axis=-1)) / np.sum(np.abs(sent) ** 2, axis=-1)
    if np.any(gain == 0):
        raise MetricsError("Received symbols are uncorrelated with the transmitted ones")
    return received / gain[:, None]


def transmit(config: ExperimentConfig, dm_kind: DmKind, block_length: int, launch_power_dbm: float) -> Transmission:
    """TX, channel and RX DSP up to CPR; raises StageError tagged tx, channel or rx."""
    coordinates = PointCoordinates(dm_kind, block_length, 0, launch_power_dbm)
    streams = point_streams(derive_seed(config.master_seed, coordinates))
    with stage("tx"):
        constellation, priors, scale, sent = _transmit_symbols(config, dm_kind, block_length, streams)

    if config.channel_model is ChannelModel.AWGN:
        with stage("channel"):
            received = _through_awgn(config, sent, streams)
        warnings = []
    else:
        received, warnings = _through_fiber(config, sent, config.launch_power_w(launch_power_dbm), streams)

    guard = config.guard_symbols
    with stage("rx"):
        sent = [s[:, guard:-guard] for s in sent]
        received = {i: _normalize_gain(r[:, guard:-guard], sent[i]) for i, r in received.items()}
    return Transmission(config, dm_kind, block_length, launch_power_dbm, constellation, priors,
                        scale, sent, received, warnings)


def _cpr_spec(config: ExperimentConfig, half_window: int) -> CprSpec:
    if config.cpr is CprKind.MPR:
        return CprSpec.mpr()
    return CprSpec.bps(half_window).model_copy(update={"fix_cycle_slips": config.laser.enabled})


def _recover(transmission: Transmission, channel: int, spec: CprSpec) -> np.ndarray:
    sent = transmission.sent[channel]
    corrected, _ = recover_carrier(transmission.received[channel], sent, transmission.constellation,
                                   transmission.scale, spec)
    if spec.kind is CprKind.BPS and not spec.fix_cycle_slips:
        # without laser noise only the global quarter-turn ambiguity of BPS is resolved
        corrected = cycle_slip_fix(corrected, sent, block=corrected.shape[-1])
    return corrected


def _air(transmission: Transmission, corrected: np.ndarray, sent: np.ndarray, snr_db: float):
    noise_variance = float(np.mean(np.abs(sent) ** 2)) * 10 ** (-snr_db / 10.0)
    llrs = demap_bit_metrics(corrected, noise_variance, transmission.constellation, transmission.priors,
                             transmission.scale)
    bits = transmitted_bits(sent, transmission.constellation, transmission.scale)
    return air_bmd(llrs, bits, transmission.priors)


def _npn(transmission: Transmission, table: CoefficientTable, channel: int, half_window: int, snr_db: float) -> float:
    config = transmission.config
    frame = transmission.sent[channel].shape[-1]
    spec = NpnSpec(
        channel=channel,
        n_channels=config.grid.n_channels,
        memory=table.memory,
        cpr_half_window=frame if config.cpr is CprKind.MPR else half_window,
        es_n0=10 ** (snr_db / 10.0),
        launch_powers_w=(config.launch_power_w(transmission.launch_power_dbm),) * config.grid.n_channels,
    )
    channels = [normalize_power(s) for s in transmission.sent]
    series = npn_phase_series(channels, table, spec.phi_bar(config.link_spec), channel)
    return npn_metric(series, spec)


def evaluate(transmission: Transmission, half_window: int, table: CoefficientTable | None = None,
             failed_metrics: dict[str, str] | None = None) -> ExperimentPoint:
    """CPR with one window and every requested metric, averaged over the SCOI."""
    start = time.perf_counter()
    config = transmission.config
    requested = set(config.metrics)
    failed_metrics = dict(failed_metrics or {})
    spec = _cpr_spec(config, half_window)
    snr, air, half_width, npn = [], [], [], []
    for i in config.channels_of_interest:
        sent = transmission.sent[i]
        with stage("cpr"):
            corrected = _recover(transmission, i, spec)
        with stage("metrics"):
            snr.append(effective_snr(corrected, sent))
            if "air" in requested:
                estimate = _air(transmission, corrected, sent, snr[-1])
                air.append(estimate.air)
                half_width.append(estimate.half_width)
            if "npn" in requested and "npn" not in failed_metrics:
                try:
                    npn.append(_npn(transmission, table, i, half_window, snr[-1]))
                except MetricsError as e:
                    logger.warning(f"NPN failed for channel {i}: {e}")
                    failed_metrics["npn"] = str(e)

    metrics = {"snr_db": float(np.mean(snr))}
    if air:
        metrics["air"] = float(np.mean(air))
        metrics["air_half_width"] = float(np.sqrt(np.sum(np.square(half_width)))) / len(half_width)
    if npn and "npn" not in failed_metrics:
        metrics["npn"] = float(np.mean(npn))
    with stage("metrics"):
        scoi = [transmission.sent[i] for i in config.channels_of_interest]
        if "eedi" in requested:
            metrics["eedi"] = float(np.mean([eedi(s, config.eedi_forgetting) for s in scoi]))
        if "edi" in requested:
            metrics["edi"] = float(np.mean([edi(s, config.edi_window) for s in scoi]))

    warnings = list(transmission.warnings) + [f"{name} failed: {reason}" for name, reason in failed_metrics.items()]
    return ExperimentPoint.measured(transmission.coordinates(half_window), time.perf_counter() - start,
                                    warnings=warnings, failed_metrics=sorted(failed_metrics), **metrics)


def _table_for(config: ExperimentConfig) -> tuple[CoefficientTable | None, dict[str, str]]:
    if "npn" not in config.metrics:
        return None, {}
    try:
        return kernel_table(config), {}
    except MetricsError as e:
        logger.warning(f"No kernel coefficients for '{config.link.name}': {e}")
        return None, {"npn": str(e)}


def run_transmission(config: ExperimentConfig, dm_kind: DmKind, block_length: int,
                     launch_power_dbm: float) -> list[ExperimentPoint]:
    """All N_CPR points sharing one transmission; failures are recorded, never raised."""
    start = time.perf_counter()
    coordinates = [PointCoordinates(dm_kind, block_length, n, launch_power_dbm) for n in config.cpr_half_windows]
    try:
        transmission = transmit(config, dm_kind, block_length, launch_power_dbm)
    except StageError as e:
        logger.error(f"Transmission {coordinates[0]} failed in stage {e.stage}: {e}", exc_info=True)
        return [ExperimentPoint.failed(c, e.stage, str(e.cause), time.perf_counter() - start) for c in coordinates]
    elapsed = time.perf_counter() - start

    table, failed_metrics = _table_for(config)
    points = []
    for c in coordinates:
        try:
            point = evaluate(transmission, c.cpr_half_window, table, failed_metrics)
            points.append(replace(point, runtime_s=point.runtime_s + elapsed))
        except StageError as e:
            logger.error(f"Point {c} failed in stage {e.stage}: {e}", exc_info=True)
            points.append(ExperimentPoint.failed(c, e.stage, str(e.cause), elapsed))
    logger.info(f"{dm_kind.value} N={block_length} P={launch_power_dbm} dBm: "
                f"{sum(p.ok for p in points)}/{len(points)} points in {time.perf_counter() - start:.1f}s")
    return points


def run_point(config: ExperimentConfig, coordinates: PointCoordinates) -> ExperimentPoint:
    """One point of the sweep; a failing stage raises StageError with its tag."""
    transmission = transmit(config, coordinates.dm_kind, coordinates.block_length, coordinates.launch_power_dbm)
    table, failed_metrics = _table_for(config)
    return evaluate(transmission, coordinates.cpr_half_window, table, failed_metrics)


def mark_optimal_power(points: list[ExperimentPoint]) -> list[ExperimentPoint]:
    """Flag the launch power with the highest AIR per (DM kind, N, N_CPR)."""
    best: dict[tuple, ExperimentPoint] = {}
    for point in points:
        c = point.coordinates
        if not point.ok or math.isnan(point.air):
            continue
        key = (c.dm_kind, c.block_length, c.cpr_half_window)
        if key not in best or point.air > best[key].air:
            best[key] = point
    chosen = {id(p) for p in best.values()}
    return [replace(p, optimal_power=id(p) in chosen) for p in points]


async def _run_transmissions(config: ExperimentConfig, items: list[tuple], workers: int) -> list[ExperimentPoint]:
    queue = new_work_queue()
    for item in items:
        queue.sync_q.put(item)
    queue.sync_q.put(None)

    loop = asyncio.get_running_loop()
    collected: list[ExperimentPoint] = []
    timeout = harness_config.point_timeout
    # a timed-out worker thread cannot be killed; shutdown must not wait for it
    executor = ThreadPoolExecutor(max_workers=workers)

    async def run_item(item: tuple) -> list[ExperimentPoint]:
        try:
            return await asyncio.wait_for(loop.run_in_executor(executor, run_transmission, config, *item),
                                          timeout=timeout)
        except TimeoutError:
            logger.error(f"Transmission {item} timed out after {timeout}s")
            return [ExperimentPoint.failed(PointCoordinates(item[0], item[1], n, item[2]), "timeout",
                                           f"exceeded {timeout}s", timeout)
                    for n in config.cpr_half_windows]

    async def collect(results: list[list[ExperimentPoint]]):
        for points in results:
            collected.extend(points)

    try:
        await async_consumer_with_task_group_and_result_processor(queue, run_item, collect, max_concurrent=workers)
    finally:
        executor.shutdown(wait=False, cancel_futures=True)
    return collected


def _refinement_powers(config: ExperimentConfig, points: list[ExperimentPoint]) -> list[tuple]:
    """Neighbours at +/- the refinement step around the coarse optimum of every (DM kind, N)."""
    step = harness_config.refine_step_db
    best: dict[tuple, ExperimentPoint] = {}
    for point in points:
        c = point.coordinates
        if point.ok and not math.isnan(point.air):
            key = (c.dm_kind, c.block_length)
            if key not in best or point.air > best[key].air:
                best[key] = point
    existing = {(p.coordinates.dm_kind, p.coordinates.block_length, p.coordinates.launch_power_dbm) for p in points}
    items = []
    for (dm_kind, n), point in sorted(best.items()):
        for power in (point.coordinates.launch_power_dbm - step, point.coordinates.launch_power_dbm + step):
            item = (dm_kind, n, round(power, 6))
            if item not in existing:
                items.append(item)
    return items


def run_sweep(config: ExperimentConfig, workers: int | None = None) -> list[ExperimentPoint]:
    """Cartesian sweep merged by coordinate sort, so the worker count never changes the output."""
    workers = workers or harness_config.workers
    items = list(product(config.dm_kinds, config.block_lengths, config.launch_powers_dbm))
    logger.info(f"Sweep '{config.name}': {len(items)} transmissions x {len(config.cpr_half_windows)} CPR windows, "
                f"{workers=}")
    # fill the kernel cache once before the workers read it
    _table_for(config)
    points = asyncio.run(_run_transmissions(config, items, workers))
    if config.refine_power:
        extra = _refinement_powers(config, points)
        logger.info(f"Refining launch power with {len(extra)} extra transmissions")
        points += asyncio.run(_run_transmissions(config, extra, workers))
    points = mark_optimal_power(sorted(points, key=lambda p: p.coordinates))
    failed = [p for p in points if not p.ok]
    if failed:
        logger.warning(f"{len(failed)} of {len(points)} points failed")
    return points
