"""Square QAM constellation built from a shaped ASK amplitude alphabet."""
from dataclasses import dataclass, field

import numpy as np

from pas_npn_lab.shaping.models import AmplitudeAlphabet


def gray_code(index: np.ndarray) -> np.ndarray:
    return index ^ (index >> 1)


@dataclass(frozen=True)
class QamConstellation:
    """
    Per-dimension signed ASK with a reflected-binary labeling.

    A dimension label is the sign bit (0 for positive) followed by the Gray
    code of the amplitude index, so neighbouring points differ in one bit.
    """
    alphabet: AmplitudeAlphabet
    dimension_points: np.ndarray = field(init=False, repr=False, compare=False)
    labels: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        size = self.alphabet.size
        if size & (size - 1):
            raise ValueError(f"Reflected-binary labeling needs a power-of-two alphabet, got {size} levels")
        levels = np.asarray(self.alphabet.levels, dtype=float)
        amplitude_index = np.concatenate([np.arange(size)[::-1], np.arange(size)])
        signs = np.concatenate([-np.ones(size), np.ones(size)])
        points = signs * levels[amplitude_index]
        bits = self.alphabet.bits_per_level
        codes = gray_code(amplitude_index)
        amplitude_bits = (codes[:, None] >> np.arange(bits - 1, -1, -1)) & 1
        sign_bits = (signs < 0).astype(np.int64)[:, None]
        object.__setattr__(self, "dimension_points", points)
        object.__setattr__(self, "labels", np.hstack([sign_bits, amplitude_bits]).astype(np.int8))

    @classmethod
    def square(cls, order: int) -> 'QamConstellation':
        """Square M-QAM, e.g. order=256 for 16-ASK per dimension."""
        side = int(round(np.sqrt(order)))
        if side * side != order or side % 2:
            raise ValueError(f"{order=} is not an even square")
        return cls(AmplitudeAlphabet.ask(side // 2))

    @property
    def bits_per_dimension(self) -> int:
        return self.labels.shape[1]

    @property
    def bits_per_symbol(self) -> int:
        """Bits per polarization (two real dimensions)."""
        return 2 * self.bits_per_dimension

    @property
    def size(self) -> int:
        """Number of points per polarization."""
        return len(self.dimension_points) ** 2

    @property
    def points(self) -> np.ndarray:
        """Unscaled complex points of one polarization."""
        return (self.dimension_points[:, None] + 1j * self.dimension_points[None, :]).ravel()

    def amplitude_priors(self, priors: np.ndarray | None = None) -> np.ndarray:
        if priors is None:
            return np.full(self.alphabet.size, 1.0 / self.alphabet.size)
        priors = np.asarray(priors, dtype=float)
        if priors.shape != (self.alphabet.size,) or np.any(priors < 0):
            raise ValueError("Amplitude priors must be one non-negative weight per level")
        return priors / priors.sum()

    def dimension_priors(self, priors: np.ndarray | None = None) -> np.ndarray:
        """Priors of the signed dimension points (uniform signs)."""
        amplitude = self.amplitude_priors(priors)
        return 0.5 * np.concatenate([amplitude[::-1], amplitude])

    def scale_for(self, priors: np.ndarray | None = None) -> float:
        """Scale giving unit average energy per polarization symbol under the priors."""
        energy = float(self.amplitude_priors(priors) @ self.alphabet.squares)
        return 1.0 / np.sqrt(2.0 * energy)

    def hard_decision(self, received: np.ndarray, scale: float = 1.0) -> np.ndarray:
        """Nearest point per real dimension; complex in, complex out."""
        received = np.asarray(received)
        if np.iscomplexobj(received):
            return self.hard_decision(received.real, scale) + 1j * self.hard_decision(received.imag, scale)
        boundaries = scale * 0.5 * (self.dimension_points[1:] + self.dimension_points[:-1])
        return scale * self.dimension_points[np.searchsorted(boundaries, received)]

    def label_bits(self, signed_levels: np.ndarray) -> np.ndarray:
        """Bit labels of unscaled signed levels, shape (..., bits_per_dimension)."""
        signed_levels = np.asarray(signed_levels)
        position = np.searchsorted(self.dimension_points, signed_levels)
        position = np.clip(position, 0, len(self.dimension_points) - 1)
        if not np.array_equal(self.dimension_points[position], signed_levels):
            raise ValueError("Values are not constellation levels")
        return self.labels[position]
