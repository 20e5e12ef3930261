"""
Exact energy trellis behind enumerative sphere shaping and shell mapping.

Sequence energies are handled in "excess units": with a0 the smallest level
and g = gcd(a^2 - a0^2), every length-N sequence has energy N*a0^2 + g*t for
an integer excess t >= 0. Counts are unbounded Python integers stored in
numpy object arrays.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from math import gcd

import numpy as np

from pas_npn_lab.core.errors import CapacityError, EmptySupportError
from pas_npn_lab.shaping.models import AmplitudeAlphabet

logger = logging.getLogger(__name__)


def excess_units(alphabet: AmplitudeAlphabet) -> tuple[int, tuple[int, ...]]:
    """Return the energy unit g and the per-level excess d_a = (a^2 - a0^2) / g."""
    squares = [a * a for a in alphabet.levels]
    diffs = [s - squares[0] for s in squares]
    unit = 0
    for d in diffs[1:]:
        unit = gcd(unit, d)
    return unit, tuple(d // unit for d in diffs)


def energy_of_excess(alphabet: AmplitudeAlphabet, n: int, excess: int) -> int:
    unit, _ = excess_units(alphabet)
    return n * alphabet.levels[0] ** 2 + unit * excess


def excess_of_energy(alphabet: AmplitudeAlphabet, n: int, energy: int) -> int:
    """Largest excess whose energy does not exceed ``energy`` (negative if below the minimum)."""
    unit, _ = excess_units(alphabet)
    return (energy - n * alphabet.levels[0] ** 2) // unit


@lru_cache(maxsize=128)
def _shell_polynomial(alphabet: AmplitudeAlphabet, n: int) -> tuple[int, ...]:
    _, deltas = excess_units(alphabet)
    counts = np.zeros(1, dtype=object)
    counts[0] = 1
    for _ in range(n):
        grown = np.zeros(len(counts) + deltas[-1], dtype=object)
        for d in deltas:
            grown[d:d + len(counts)] += counts
        counts = grown
    return tuple(int(c) for c in counts)


def shell_counts(alphabet: AmplitudeAlphabet, n: int) -> dict[int, int]:
    """Number of length-n sequences per reachable energy, in increasing energy order."""
    poly = _shell_polynomial(alphabet, n)
    return {
        energy_of_excess(alphabet, n, t): c
        for t, c in enumerate(poly) if c > 0
    }


@dataclass(frozen=True)
class TrellisCounts:
    """
    Suffix counts of an energy-constrained set of length-N sequences.

    ``tables[j][t]`` is the number of completions of positions j..N-1 for a
    prefix of excess t such that the total excess is admitted. ``admitted``
    flags the admitted total excesses 0..T; a sphere admits all of them.
    """
    alphabet: AmplitudeAlphabet
    n: int
    admitted: tuple[bool, ...]
    tables: tuple[np.ndarray, ...]

    @property
    def max_excess(self) -> int:
        return len(self.admitted) - 1

    @property
    def is_sphere(self) -> bool:
        return all(self.admitted)

    @property
    def e_max(self) -> int:
        return energy_of_excess(self.alphabet, self.n, self.max_excess)

    @property
    def total(self) -> int:
        return int(self.tables[0][0])

    @property
    def energy_levels(self) -> list[int]:
        """Sorted reachable energies of admitted sequences."""
        poly = _shell_polynomial(self.alphabet, self.n)
        return [
            energy_of_excess(self.alphabet, self.n, t)
            for t, ok in enumerate(self.admitted)
            if ok and t < len(poly) and poly[t] > 0
        ]

    def completions(self, position: int, prefix_excess: int) -> int:
        if prefix_excess > self.max_excess:
            return 0
        return int(self.tables[position][prefix_excess])

    def count(self, position: int, budget: int) -> int:
        """Number of suffixes of length N - position with energy <= budget."""
        if not self.is_sphere:
            raise ValueError("Budget counts are only defined for sphere trellises")
        remaining = self.n - position
        suffix_excess = excess_of_energy(self.alphabet, remaining, budget)
        if suffix_excess < 0:
            return 0
        if suffix_excess > self.max_excess:
            raise ValueError(f"{budget=} exceeds the trellis sphere energy {self.e_max}")
        return self.completions(position, self.max_excess - suffix_excess)

    def verify(self) -> bool:
        """Recompute every table bottom-up and compare with the stored counts."""
        _, deltas = excess_units(self.alphabet)
        rebuilt = _suffix_tables(deltas, self.n, self.admitted)
        return all(np.array_equal(a, b) for a, b in zip(rebuilt, self.tables))


def _suffix_tables(deltas: tuple[int, ...], n: int, admitted: tuple[bool, ...]) -> tuple[np.ndarray, ...]:
    size = len(admitted)
    tables: list[np.ndarray] = [np.zeros(0, dtype=object)] * (n + 1)
    last = np.zeros(size, dtype=object)
    last[:] = [1 if ok else 0 for ok in admitted]
    tables[n] = last
    for j in range(n - 1, -1, -1):
        following = tables[j + 1]
        current = np.zeros(size, dtype=object)
        for d in deltas:
            if d < size:
                current[:size - d] += following[d:]
        tables[j] = current
    return tuple(tables)


def build_admitted_trellis(alphabet: AmplitudeAlphabet, n: int, admitted_energies: list[int] | tuple[int, ...]) -> TrellisCounts:
    """Trellis over the sequences whose energy is one of ``admitted_energies``."""
    excesses = sorted(excess_of_energy(alphabet, n, e) for e in admitted_energies)
    if not excesses or excesses[0] < 0:
        raise EmptySupportError(f"No sequence of length {n} reaches energies {admitted_energies}")
    admitted = [False] * (excesses[-1] + 1)
    for t in excesses:
        admitted[t] = True
    _, deltas = excess_units(alphabet)
    tables = _suffix_tables(deltas, n, tuple(admitted))
    trellis = TrellisCounts(alphabet=alphabet, n=n, admitted=tuple(admitted), tables=tables)
    if trellis.total == 0:
        raise EmptySupportError(f"No sequence of length {n} reaches energies {admitted_energies}")
    logger.debug(f"Built shell trellis {n=} shells={len(excesses)} total={trellis.total.bit_length()} bits")
    return trellis


def build_energy_trellis(alphabet: AmplitudeAlphabet, n: int, e_max: int) -> TrellisCounts:
    """Trellis over all length-n sequences with energy <= e_max."""
    max_excess = excess_of_energy(alphabet, n, e_max)
    if max_excess < 0:
        raise EmptySupportError(f"{e_max=} is below the minimum sequence energy {n * alphabet.levels[0] ** 2}")
    _, deltas = excess_units(alphabet)
    admitted = (True,) * (max_excess + 1)
    tables = _suffix_tables(deltas, n, admitted)
    logger.debug(f"Built sphere trellis {n=} {e_max=} states={max_excess + 1}")
    return TrellisCounts(alphabet=alphabet, n=n, admitted=admitted, tables=tables)


def min_sphere_energy(alphabet: AmplitudeAlphabet, n: int, k: int) -> int:
    """Smallest reachable energy whose sphere holds at least 2^k sequences."""
    if k < 0:
        raise ValueError("k must be non-negative")
    needed = 1 << k
    if needed > alphabet.size ** n:
        raise CapacityError(f"2^{k} exceeds the {alphabet.size}^{n} sequences of length {n}")
    cumulative = 0
    for energy, count in shell_counts(alphabet, n).items():
        cumulative += count
        if cumulative >= needed:
            return energy
    raise CapacityError(f"2^{k} sequences not reachable")
