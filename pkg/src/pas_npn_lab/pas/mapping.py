"""
Serial and parallel maps from four DM amplitude blocks plus signs to
dual-polarization 4D symbols with components (xI, xQ, yI, yQ).
"""
import logging
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
import pandas as pd

from pas_npn_lab.core.errors import FrameShapeError
from pas_npn_lab.shaping.models import AmplitudeBlock

logger = logging.getLogger(__name__)

COMPONENT_COLUMNS = ["xI", "xQ", "yI", "yQ"]


class MapKind(StrEnum):
    SERIAL = "serial"
    PARALLEL = "parallel"


@dataclass
class FourDSymbolFrame:
    """4D symbols of one channel: ``components[t] = (xI, xQ, yI, yQ)`` already multiplied by ``scale``."""
    components: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        self.components = np.asarray(self.components, dtype=float)
        if self.components.ndim != 2 or self.components.shape[1] != 4:
            raise FrameShapeError(f"Frame components must have shape (T, 4), got {self.components.shape}")

    def __len__(self) -> int:
        return self.components.shape[0]

    def polarizations(self) -> np.ndarray:
        """Complex symbols as a (2, T) array: row 0 is x, row 1 is y."""
        c = self.components
        return np.vstack([c[:, 0] + 1j * c[:, 1], c[:, 2] + 1j * c[:, 3]])

    def signed_levels(self) -> np.ndarray:
        """Unscaled signed amplitudes."""
        return np.rint(self.components / self.scale).astype(np.int64)

    def to_csv(self, path: str | Path) -> None:
        frame = pd.DataFrame(self.components, columns=COMPONENT_COLUMNS)
        frame.to_csv(path, index=False, float_format="%.17g")
        logger.debug(f"Wrote {len(self)} 4D symbols to {path}")

    @classmethod
    def from_csv(cls, path: str | Path, scale: float = 1.0) -> 'FourDSymbolFrame':
        frame = pd.read_csv(path, float_precision="round_trip")
        if list(frame.columns) != COMPONENT_COLUMNS:
            raise FrameShapeError(f"Expected columns {COMPONENT_COLUMNS}, got {list(frame.columns)}")
        return cls(frame.to_numpy(), scale)


class SignSource:
    """Seeded uniform sign bits, returned as +/-1."""

    def __init__(self, seed: int | np.random.Generator):
        self.rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def bits(self, shape) -> np.ndarray:
        return self.rng.integers(0, 2, size=shape, dtype=np.int8)

    def signs(self, shape) -> np.ndarray:
        return 1 - 2 * self.bits(shape).astype(np.int64)


def _stack_blocks(blocks, signs) -> tuple[np.ndarray, np.ndarray]:
    rows = [b.as_array() if isinstance(b, AmplitudeBlock) else np.asarray(b) for b in blocks]
    if len({row.shape for row in rows}) > 1:
        raise FrameShapeError(f"Amplitude blocks differ in shape: {[row.shape for row in rows]}")
    amplitudes = np.asarray(rows)
    if amplitudes.ndim != 2 or amplitudes.shape[0] != 4:
        raise FrameShapeError(f"Expected four equal-length amplitude blocks, got shape {amplitudes.shape}")
    signs = np.ones_like(amplitudes) if signs is None else np.asarray(signs)
    if signs.shape != amplitudes.shape:
        raise FrameShapeError(f"Signs shape {signs.shape} does not match amplitudes {amplitudes.shape}")
    return amplitudes, signs


def map_serial(blocks, signs=None, scale: float = 1.0) -> FourDSymbolFrame:
    """DM j fills the four components of 4D symbols j*N/4 .. (j+1)*N/4 - 1."""
    amplitudes, signs = _stack_blocks(blocks, signs)
    n = amplitudes.shape[1]
    if n % 4:
        raise FrameShapeError(f"Serial map needs N divisible by 4, got {n}")
    return FourDSymbolFrame((amplitudes * signs).reshape(-1, 4) * scale, scale)


def map_parallel(blocks, signs=None, scale: float = 1.0) -> FourDSymbolFrame:
    """DM j fills component j of all N 4D symbols."""
    amplitudes, signs = _stack_blocks(blocks, signs)
    return FourDSymbolFrame((amplitudes * signs).T * scale, scale)


def map_blocks(kind: MapKind, amplitudes: np.ndarray, signs: np.ndarray, scale: float = 1.0) -> FourDSymbolFrame:
    """Map consecutive groups of four blocks; ``amplitudes`` and ``signs`` have shape (4*G, N)."""
    amplitudes = np.asarray(amplitudes)
    if amplitudes.ndim != 2 or amplitudes.shape[0] % 4:
        raise FrameShapeError(f"Need a multiple of four blocks, got shape {amplitudes.shape}")
    signed = amplitudes * np.asarray(signs)
    n = amplitudes.shape[1]
    if kind is MapKind.SERIAL:
        if n % 4:
            raise FrameShapeError(f"Serial map needs N divisible by 4, got {n}")
        components = signed.reshape(-1, 4)
    else:
        components = signed.reshape(-1, 4, n).transpose(0, 2, 1).reshape(-1, 4)
    return FourDSymbolFrame(components * scale, scale)


def unmap_frame(frame: FourDSymbolFrame, kind: MapKind, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Recover (amplitude blocks, signs), each of shape (4*G, N), from a clean frame."""
    levels = frame.signed_levels()
    if len(levels) % n:
        raise FrameShapeError(f"Frame of {len(levels)} symbols is not a multiple of N={n}")
    groups = levels.reshape(-1, n, 4)
    if kind is MapKind.SERIAL:
        blocks = groups.reshape(-1, 4, n)
    else:
        blocks = groups.transpose(0, 2, 1)
    blocks = blocks.reshape(-1, n)
    return np.abs(blocks), np.sign(blocks)
