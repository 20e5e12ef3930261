"""Amplitude sources: DM block streams and the long-block emulation by interleaved concatenation."""
import logging

import numpy as np

from pas_npn_lab.core.config import shaping_config
from pas_npn_lab.core.errors import ShapingError
from pas_npn_lab.shaping.matchers import get_matcher
from pas_npn_lab.shaping.models import AmplitudeBlock, DmKind, DmSpec
from pas_npn_lab.shaping.statistics import mb_for_entropy, rate_matched_spec

logger = logging.getLogger(__name__)


def random_words(rng: np.random.Generator, k: int, count: int) -> list[int]:
    """``count`` uniform k-bit words (k may exceed 64)."""
    if k == 0:
        return [0] * count
    bits = rng.integers(0, 2, size=(count, k), dtype=np.uint8)
    pad = (-k) % 8
    packed = np.packbits(np.pad(bits, ((0, 0), (pad, 0))), axis=1)
    return [int.from_bytes(row.tobytes(), "big") for row in packed]


def emulate_long_block(spec: DmSpec, concat_factor: int, interleaver_seed: int | np.random.Generator,
                       words: list[int] | None = None) -> AmplitudeBlock:
    """
    Concatenate ``concat_factor`` independent DM outputs and interleave them.

    Input words are drawn from the seeded stream unless given explicitly; the
    interleaver is a uniform permutation of length concat_factor * N drawn
    from the same stream.
    """
    if concat_factor < 1:
        raise ValueError(f"{concat_factor=} must be at least 1")
    rng = interleaver_seed if isinstance(interleaver_seed, np.random.Generator) else np.random.default_rng(interleaver_seed)
    if words is None:
        words = random_words(rng, spec.k, concat_factor)
    elif len(words) != concat_factor:
        raise ValueError(f"Expected {concat_factor} input words, got {len(words)}")
    matcher = get_matcher(spec)
    stream = matcher.encode_many(words).reshape(-1)
    return AmplitudeBlock.of(stream[rng.permutation(stream.size)])


def base_spec_for(spec: DmSpec, emulation_block: int | None = None) -> tuple[DmSpec, int]:
    """Spec actually encoded for ``spec`` and the concatenation factor emulating it."""
    emulation_block = emulation_block or shaping_config.emulation_block_length
    if spec.kind is DmKind.MB_IID or spec.n <= emulation_block:
        return spec, 1
    if spec.n % emulation_block or (spec.k * emulation_block) % spec.n:
        raise ShapingError(f"N={spec.n} cannot be emulated with blocks of {emulation_block}")
    base = rate_matched_spec(spec.kind, spec.alphabet, emulation_block, spec.rate, spec.shells or 2)
    return base, spec.n // emulation_block


def draw_amplitude_stream(spec: DmSpec, n_blocks: int, rng: np.random.Generator,
                          emulation_block: int | None = None) -> np.ndarray:
    """
    ``n_blocks`` consecutive blocks of ``spec.n`` amplitudes as an (n_blocks, N) array.

    Blocks longer than the emulation length are emulated by concatenating
    shorter DM outputs followed by an interleaver of length N. MB_IID draws
    i.i.d. amplitudes from the MB law of entropy k/N.
    """
    levels = np.asarray(spec.alphabet.levels, dtype=np.int64)
    if spec.kind is DmKind.MB_IID:
        probabilities = mb_for_entropy(spec.alphabet, spec.rate)
        return rng.choice(levels, size=(n_blocks, spec.n), p=probabilities)
    base, factor = base_spec_for(spec, emulation_block)
    if factor == 1:
        return get_matcher(spec).encode_many(random_words(rng, spec.k, n_blocks))
    logger.debug(f"Emulating N={spec.n} with {factor} x N={base.n} blocks")
    rows = [emulate_long_block(base, factor, rng).as_array() for _ in range(n_blocks)]
    return np.stack(rows)
