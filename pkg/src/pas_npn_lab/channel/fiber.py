"""
Split-step Fourier propagation of the Manakov equation, plus the receiver-side
inverses (EDC and single-channel DBP) that reuse the same operators.
"""
import logging
import math

import numpy as np
from scipy import fft

from pas_npn_lab.channel.amplifier import edfa
from pas_npn_lab.channel.models import FiberSpan, LinkSpec, StepMode, StepRule, WaveformGrid

logger = logging.getLogger(__name__)

# Manakov averaging of the Kerr term over the Poincare sphere
MANAKOV_FACTOR = 8.0 / 9.0


def nonlinear_length(alpha: float, h: float) -> float:
    """Integral of exp(-alpha z) over a step of length h centred on z = 0."""
    if alpha == 0:
        return h
    return 2.0 * math.sinh(alpha * h / 2.0) / alpha


def step_sizes(span: FiberSpan, waveform: WaveformGrid, step_rule: StepRule) -> list[float]:
    """Steps covering the span. Adaptive mode bounds the phase using the launch peak power decayed by loss."""
    nominal = span.default_step_km * step_rule.step_scale
    if span.gamma_w_km == 0:
        return [span.length_km]
    if step_rule.mode is StepMode.FIXED:
        count = max(1, math.ceil(span.length_km / nominal - 1e-9))
        return [span.length_km / count] * count

    gamma = MANAKOV_FACTOR * span.gamma_w_km
    peak = float(np.max(np.sum(np.abs(waveform.samples) ** 2, axis=0)))
    steps, z = [], 0.0
    while z < span.length_km - 1e-12:
        power = peak * math.exp(-span.alpha * z)
        h = nominal if power == 0 else min(nominal, step_rule.max_nonlinear_phase / (gamma * power))
        h = min(h, span.length_km - z)
        steps.append(h)
        z += h
    return steps


def _linear(samples: np.ndarray, omega: np.ndarray, alpha: float, beta2: float, dz: float) -> np.ndarray:
    if dz == 0:
        return samples
    transfer = np.exp((-alpha / 2.0 + 0.5j * beta2 * omega ** 2) * dz)
    return fft.ifft(fft.fft(samples, axis=-1) * transfer, axis=-1)


def _split_step(waveform: WaveformGrid, span: FiberSpan, steps: list[float], step_rule: StepRule,
                frequency_offset: float, direction: int) -> WaveformGrid:
    """Symmetric split step; ``direction=-1`` runs the exact inverse with the steps reversed."""
    omega = waveform.angular_frequencies + 2.0 * np.pi * frequency_offset
    alpha = direction * span.alpha
    beta2 = direction * span.beta2
    gamma = direction * MANAKOV_FACTOR * span.gamma_w_km
    if direction < 0:
        steps = steps[::-1]

    samples = waveform.samples
    if gamma == 0:
        return waveform.replace(_linear(samples, omega, alpha, beta2, sum(steps)))

    result = waveform.replace(samples)
    max_phase = 0.0
    pending = steps[0] / 2.0
    for i, h in enumerate(steps):
        samples = _linear(samples, omega, alpha, beta2, pending)
        power = np.sum(np.abs(samples) ** 2, axis=0)
        phase = gamma * power * nonlinear_length(span.alpha, h)
        max_phase = max(max_phase, float(np.max(np.abs(phase))))
        samples = samples * np.exp(1j * phase)
        pending = h / 2.0 + (steps[i + 1] / 2.0 if i + 1 < len(steps) else 0.0)
    samples = _linear(samples, omega, alpha, beta2, pending)

    if direction > 0 and max_phase > step_rule.max_nonlinear_phase:
        result.warn(f"SSFM step too coarse on {span.kind} span: nonlinear phase {max_phase:.3f} rad per step")
    result.samples = samples
    logger.debug(f"Propagated {span.length_km} km {span.kind} in {len(steps)} steps, {max_phase=:.4f}")
    return result


def ssfm_propagate(waveform: WaveformGrid, span: FiberSpan, step_rule: StepRule | None = None,
                   frequency_offset: float = 0.0) -> WaveformGrid:
    """Propagate through one fiber segment (no amplifier)."""
    step_rule = step_rule or StepRule()
    steps = step_sizes(span, waveform, step_rule)
    return _split_step(waveform, span, steps, step_rule, frequency_offset, direction=1)


def propagate_link(waveform: WaveformGrid, link: LinkSpec, step_rule: StepRule | None = None,
                   rng: np.random.Generator | None = None) -> WaveformGrid:
    """All segments with the EDFA after each; ``rng=None`` gives noiseless amplifiers."""
    step_rule = step_rule or StepRule()
    gains = link.amplifier_gains_db()
    for i, span in enumerate(link.spans):
        waveform = ssfm_propagate(waveform, span, step_rule)
        if link.amplified:
            waveform = edfa(waveform, gains[i], link.noise_figure_db, rng)
    logger.info(f"Propagated {link.name}: {len(link.spans)} segments, {link.total_length_km:.1f} km, "
                f"{len(waveform.warnings)} warnings")
    return waveform


def edc(waveform: WaveformGrid, link: LinkSpec, frequency_offset: float = 0.0) -> WaveformGrid:
    """Inverse of the accumulated linear transfer function (loss too when the link is unamplified)."""
    omega = waveform.angular_frequencies + 2.0 * np.pi * frequency_offset
    exponent = -0.5j * link.accumulated_beta2 * omega ** 2
    if not link.amplified:
        exponent = exponent + sum(s.alpha * s.length_km for s in link.spans) / 2.0
    return waveform.replace(fft.ifft(fft.fft(waveform.samples, axis=-1) * np.exp(exponent), axis=-1))


def dbp_single_channel(waveform: WaveformGrid, link: LinkSpec, steps: int | None = None,
                       step_rule: StepRule | None = None, frequency_offset: float = 0.0) -> WaveformGrid:
    """
    Ideal back-propagation of one demultiplexed channel. ``steps`` per segment
    overrides the step rule; with neither, the forward fixed steps are mirrored.
    """
    step_rule = step_rule or StepRule()
    gains = link.amplifier_gains_db()
    for i in reversed(range(len(link.spans))):
        span = link.spans[i]
        if link.amplified:
            waveform = waveform.replace(waveform.samples / 10 ** (gains[i] / 20.0))
        if steps is not None:
            span_steps = [span.length_km / steps] * steps
        else:
            span_steps = step_sizes(span, waveform, step_rule.model_copy(update={"mode": StepMode.FIXED}))
        waveform = _split_step(waveform, span, span_steps, step_rule, frequency_offset, direction=-1)
    return waveform
