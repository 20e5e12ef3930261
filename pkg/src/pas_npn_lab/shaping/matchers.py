"""
Distribution matchers: enumerative sphere shaping (SS), shell mapping (SM-m,
SM-max) and constant-composition distribution matching (CCDM).

All matchers index their image lexicographically over alphabet-index order
and use exact integer arithmetic, so decode(encode(b)) == b for every b < 2^k.
"""
import logging
from abc import ABC, abstractmethod
from collections.abc import Sequence
from fractions import Fraction
from functools import lru_cache

import numpy as np

from pas_npn_lab.core.config import shaping_config
from pas_npn_lab.core.errors import CapacityError, DecodeError, EmptySupportError, OutOfImageError, ShapingError
from pas_npn_lab.shaping.models import AmplitudeBlock, DmKind, DmSpec, ShellSupport, multinomial
from pas_npn_lab.shaping.trellis import (
    TrellisCounts,
    build_admitted_trellis,
    build_energy_trellis,
    excess_units,
    min_sphere_energy,
    shell_counts,
)

logger = logging.getLogger(__name__)


def _fill_lowest_energy(window: list[tuple[int, int]], needed: int) -> float:
    """Average energy of ``needed`` sequences taken from the lowest shells of ``window`` first."""
    remaining = needed
    total = 0
    for energy, count in window:
        take = min(count, remaining)
        total += take * energy
        remaining -= take
        if remaining == 0:
            break
    return total / needed


def _as_support(shells: list[tuple[int, int]]) -> ShellSupport:
    return ShellSupport(energies=tuple(e for e, _ in shells), counts=tuple(c for _, c in shells))


def _image_energy(matcher: 'DistributionMatcher') -> Fraction:
    counts = matcher.image_level_counts()
    return Fraction(sum(c * a * a for c, a in zip(counts, matcher.spec.alphabet.levels)), 1 << matcher.k)


def _sm_energy(spec: DmSpec, shells: int) -> Fraction | None:
    try:
        return _image_energy(get_matcher(DmSpec.sm(spec.alphabet, spec.n, spec.k, shells)))
    except CapacityError:
        return None


def _sm_max_shells(spec: DmSpec, shells: list[tuple[int, int]], needed: int) -> list[tuple[int, int]]:
    """
    SS shells plus the next one, then innermost shells dropped while 2^k
    sequences remain. The deepest stage whose image energy lies between SS
    and every SM(w) with w < max(m, 3) is kept; the SS shells are the last
    resort.
    """
    e_ss = min_sphere_energy(spec.alphabet, spec.n, spec.k)
    sphere = [(e, c) for e, c in shells if e <= e_ss]
    stages = [sphere + [(e, c) for e, c in shells if e > e_ss][:1]]
    while len(stages[-1]) > 1 and sum(c for _, c in stages[-1][1:]) >= needed:
        stages.append(stages[-1][1:])

    floor = _image_energy(EnumerativeMatcher(spec, _as_support(sphere)))
    for stage in reversed(stages):
        energy = _image_energy(EnumerativeMatcher(spec, _as_support(stage)))
        if energy < floor:
            continue
        bounds = [_sm_energy(spec, w) for w in range(1, max(len(stage), 3))]
        if all(bound is None or energy <= bound for bound in bounds):
            return stage
        logger.debug(f"SM-max N={spec.n} k={spec.k}: {len(stage)} shells exceed the SM energy bound, keeping one more")
    return sphere


def shell_support(spec: DmSpec) -> ShellSupport:
    """Shells admitted by an SM(m), SM-max or SS spec."""
    needed = 1 << spec.k
    shells = list(shell_counts(spec.alphabet, spec.n).items())
    if needed > sum(c for _, c in shells):
        raise CapacityError(f"{spec.label}: 2^{spec.k} exceeds the number of length-{spec.n} sequences")

    match spec.kind:
        case DmKind.SS:
            e_max = spec.e_max if spec.e_max is not None else min_sphere_energy(spec.alphabet, spec.n, spec.k)
            chosen = [(e, c) for e, c in shells if e <= e_max]
            if not chosen:
                raise EmptySupportError(f"SS sphere {e_max=} is below the minimum energy of length-{spec.n} sequences")
        case DmKind.SM:
            best: list[tuple[int, int]] | None = None
            best_energy = float("inf")
            for width in range(1, spec.shells + 1):
                for start in range(len(shells) - width + 1):
                    window = shells[start:start + width]
                    if sum(c for _, c in window) < needed:
                        continue
                    energy = _fill_lowest_energy(window, needed)
                    # strict comparison keeps the narrower, lower window on ties
                    if energy < best_energy:
                        best, best_energy = window, energy
            if best is None:
                raise CapacityError(f"No window of {spec.shells} shells holds 2^{spec.k} sequences at N={spec.n}")
            chosen = best
        case DmKind.SM_MAX:
            chosen = _sm_max_shells(spec, shells, needed)
        case _:
            raise ShapingError(f"{spec.kind} has no shell support")

    support = _as_support(chosen)
    logger.debug(f"{spec.label} N={spec.n} k={spec.k}: shells {support.energies}")
    return support


class DistributionMatcher(ABC):
    """Bijection between k-bit words and the 2^k sequences of the matcher image."""

    def __init__(self, spec: DmSpec):
        self.spec = spec
        self.k = spec.k
        self.n = spec.n
        self._level_index = {a: i for i, a in enumerate(spec.alphabet.levels)}

    @property
    @abstractmethod
    def support(self) -> ShellSupport:
        ...

    @abstractmethod
    def encode(self, index: int) -> AmplitudeBlock:
        ...

    @abstractmethod
    def decode(self, block: AmplitudeBlock | Sequence[int]) -> int:
        ...

    @abstractmethod
    def image_level_counts(self) -> list[int]:
        """Occurrences of every level summed over the 2^k image sequences."""

    def _check_index(self, index: int) -> None:
        if not 0 <= index < (1 << self.k):
            raise ValueError(f"Input word {index} outside [0, 2^{self.k})")

    def _indices(self, block: AmplitudeBlock | Sequence[int]) -> list[int]:
        amplitudes = block.amplitudes if isinstance(block, AmplitudeBlock) else tuple(int(a) for a in block)
        if len(amplitudes) != self.n:
            raise DecodeError(f"Block of length {len(amplitudes)} given to a length-{self.n} matcher")
        try:
            return [self._level_index[a] for a in amplitudes]
        except KeyError as e:
            raise DecodeError(f"Amplitude {e.args[0]} is not an alphabet level") from e

    def encode_bits(self, bits: Sequence[int]) -> AmplitudeBlock:
        """Encode a k-bit word given MSB first."""
        if len(bits) != self.k:
            raise ValueError(f"Expected {self.k} bits, got {len(bits)}")
        return self.encode(int("".join(str(int(b)) for b in bits) or "0", 2))

    def decode_bits(self, block: AmplitudeBlock | Sequence[int]) -> list[int]:
        index = self.decode(block)
        return [(index >> (self.k - 1 - i)) & 1 for i in range(self.k)]

    def encode_many(self, indices: Sequence[int]) -> np.ndarray:
        """Encode several words into an (n_blocks, N) integer array."""
        out = np.empty((len(indices), self.n), dtype=np.int64)
        for row, index in enumerate(indices):
            out[row] = self.encode(index).amplitudes
        return out


class EnumerativeMatcher(DistributionMatcher):
    """Lexicographic enumerative coding over an energy trellis (SS, SM-m, SM-max)."""

    def __init__(self, spec: DmSpec, support: ShellSupport | None = None):
        super().__init__(spec)
        self._support = shell_support(spec) if support is None else support
        if spec.kind is DmKind.SS:
            self.trellis: TrellisCounts = build_energy_trellis(spec.alphabet, spec.n, max(self._support.energies))
        else:
            self.trellis = build_admitted_trellis(spec.alphabet, spec.n, self._support.energies)
        if self.trellis.total < (1 << spec.k):
            raise CapacityError(f"{spec.label}: {self.trellis.total} sequences admitted, 2^{spec.k} needed")
        _, self._deltas = excess_units(spec.alphabet)

    @property
    def support(self) -> ShellSupport:
        return self._support

    def encode(self, index: int) -> AmplitudeBlock:
        self._check_index(index)
        levels = self.spec.alphabet.levels
        tables = self.trellis.tables
        limit = self.trellis.max_excess
        excess = 0
        out = []
        for j in range(self.n):
            following = tables[j + 1]
            for i, d in enumerate(self._deltas):
                if excess + d > limit:
                    raise ShapingError(f"Trellis exhausted at position {j}")
                branch = following[excess + d]
                if index < branch:
                    out.append(levels[i])
                    excess += d
                    break
                index -= branch
        return AmplitudeBlock(tuple(out))

    def decode(self, block: AmplitudeBlock | Sequence[int]) -> int:
        indices = self._indices(block)
        tables = self.trellis.tables
        limit = self.trellis.max_excess
        excess = 0
        index = 0
        for j, level_idx in enumerate(indices):
            following = tables[j + 1]
            for d in self._deltas[:level_idx]:
                if excess + d <= limit:
                    index += following[excess + d]
            excess += self._deltas[level_idx]
            if excess > limit:
                raise DecodeError(f"Block energy exceeds the {self.spec.label} support")
        if not self.trellis.admitted[excess]:
            raise DecodeError(f"Block energy is not one of the {self.spec.label} shells")
        if index >= (1 << self.k):
            raise DecodeError(f"Block index {index} is beyond the 2^{self.k} encoder image")
        return int(index)

    def image_level_counts(self) -> list[int]:
        """
        Forward pass over the image {index < 2^k}: the boundary path of the
        last image word splits the image into whole subtrees (carried as a
        mass of free prefixes per excess) plus the boundary prefix itself.
        """
        tables = self.trellis.tables
        limit = self.trellis.max_excess
        size = limit + 1
        counts = [0] * self.spec.alphabet.size
        free = np.zeros(size, dtype=object)
        remaining = (1 << self.k) - 1
        excess = 0
        for j in range(self.n):
            following = tables[j + 1]
            # free prefixes extend with every level
            grown = np.zeros(size, dtype=object)
            for i, d in enumerate(self._deltas):
                if d >= size:
                    continue
                counts[i] += int(np.dot(free[:size - d], following[d:]))
                grown[d:] += free[:size - d]
            # boundary prefix: lower levels become free subtrees
            for i, d in enumerate(self._deltas):
                if excess + d > limit:
                    break
                branch = int(following[excess + d])
                if remaining < branch:
                    counts[i] += remaining + 1
                    excess += d
                    break
                counts[i] += branch
                grown[excess + d] += 1
                remaining -= branch
            free = grown
        return counts


class CcdmMatcher(DistributionMatcher):
    """
    Constant-composition matcher with exact arithmetic coding: the input word
    b selects the permutation of lexicographic rank floor(b * M / 2^k) among
    the M permutations of the composition.
    """

    def __init__(self, spec: DmSpec):
        super().__init__(spec)
        self.composition = tuple(spec.composition)
        self.permutations = multinomial(self.composition)
        if (1 << spec.k) > self.permutations:
            raise CapacityError(f"CCDM: 2^{spec.k} exceeds the {self.permutations} permutations of {self.composition}")
        energy = sum(c * a * a for c, a in zip(self.composition, spec.alphabet.levels))
        self._support = ShellSupport(energies=(energy,), counts=(self.permutations,))

    @property
    def support(self) -> ShellSupport:
        return self._support

    def _unrank(self, rank: int) -> AmplitudeBlock:
        levels = self.spec.alphabet.levels
        left = list(self.composition)
        total = self.n
        count = self.permutations
        out = []
        for _ in range(self.n):
            for i, c in enumerate(left):
                if c == 0:
                    continue
                branch = count * c // total
                if rank < branch:
                    out.append(levels[i])
                    left[i] -= 1
                    total -= 1
                    count = branch
                    break
                rank -= branch
        return AmplitudeBlock(tuple(out))

    def _rank(self, indices: list[int]) -> int:
        left = list(self.composition)
        total = self.n
        count = self.permutations
        rank = 0
        for level_idx in indices:
            for i in range(level_idx):
                if left[i]:
                    rank += count * left[i] // total
            count = count * left[level_idx] // total
            left[level_idx] -= 1
            total -= 1
        return rank

    def encode(self, index: int) -> AmplitudeBlock:
        self._check_index(index)
        return self._unrank(index * self.permutations >> self.k)

    def decode(self, block: AmplitudeBlock | Sequence[int]) -> int:
        indices = self._indices(block)
        observed = [0] * self.spec.alphabet.size
        for i in indices:
            observed[i] += 1
        if tuple(observed) != self.composition:
            raise DecodeError(f"Block composition {observed} differs from {list(self.composition)}")
        rank = self._rank(indices)
        index = -((-rank << self.k) // self.permutations)
        if index >= (1 << self.k) or (index * self.permutations >> self.k) != rank:
            raise OutOfImageError(f"Permutation rank {rank} is not reached by any {self.k}-bit input")
        return index

    def image_level_counts(self) -> list[int]:
        return [c << self.k for c in self.composition]


@lru_cache(maxsize=shaping_config.matcher_cache_size)
def get_matcher(spec: DmSpec) -> DistributionMatcher:
    """Build (once) the matcher of a spec."""
    match spec.kind:
        case DmKind.SS | DmKind.SM | DmKind.SM_MAX:
            matcher: DistributionMatcher = EnumerativeMatcher(spec)
        case DmKind.CCDM:
            matcher = CcdmMatcher(spec)
        case _:
            raise ShapingError(f"{spec.kind} has no encoder; draw it with draw_amplitude_stream")
    logger.info(f"Built {spec.label} matcher N={spec.n} k={spec.k} shells={matcher.support.energies[:3]}...")
    return matcher


def _require(spec: DmSpec, *kinds: DmKind) -> DistributionMatcher:
    if spec.kind not in kinds:
        raise ShapingError(f"Expected a {'/'.join(k.value for k in kinds)} spec, got {spec.kind}")
    return get_matcher(spec)


def ess_encode(spec: DmSpec, bits: int) -> AmplitudeBlock:
    return _require(spec, DmKind.SS).encode(bits)


def ess_decode(spec: DmSpec, block: AmplitudeBlock | Sequence[int]) -> int:
    return _require(spec, DmKind.SS).decode(block)


def sm_encode(spec: DmSpec, bits: int) -> AmplitudeBlock:
    return _require(spec, DmKind.SM, DmKind.SM_MAX).encode(bits)


def sm_decode(spec: DmSpec, block: AmplitudeBlock | Sequence[int]) -> int:
    return _require(spec, DmKind.SM, DmKind.SM_MAX).decode(block)


def ccdm_encode(spec: DmSpec, bits: int) -> AmplitudeBlock:
    return _require(spec, DmKind.CCDM).encode(bits)


def ccdm_decode(spec: DmSpec, block: AmplitudeBlock | Sequence[int]) -> int:
    return _require(spec, DmKind.CCDM).decode(block)


def sphere_energy(spec: DmSpec) -> int:
    """Sphere energy actually used by an SS spec."""
    if spec.kind is not DmKind.SS:
        raise ShapingError("Only SS specs have a sphere energy")
    return spec.e_max if spec.e_max is not None else min_sphere_energy(spec.alphabet, spec.n, spec.k)

