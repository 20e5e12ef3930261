"""
Value types of the shaping stage: amplitude alphabets, DM descriptions,
amplitude blocks and shell supports.
"""
from dataclasses import dataclass
from enum import StrEnum
from math import comb

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class AmplitudeAlphabet(BaseModel):
    """Positive odd ASK amplitude levels of one real dimension."""
    model_config = ConfigDict(frozen=True)

    levels: tuple[int, ...] = Field(description="Strictly increasing positive odd amplitude levels")
    normalized: bool = Field(default=True, description="Whether downstream stages normalize to unit average energy")

    @field_validator('levels')
    @classmethod
    def validate_levels(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if len(v) < 2:
            raise ValueError("An amplitude alphabet needs at least 2 levels")
        if any(a <= 0 or a % 2 == 0 for a in v):
            raise ValueError(f"Amplitude levels must be positive odd integers, got {v}")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError(f"Amplitude levels must be strictly increasing, got {v}")
        return v

    @classmethod
    def ask(cls, num_levels: int) -> 'AmplitudeAlphabet':
        """Levels 1, 3, ..., 2A-1 of a 2A-ASK dimension."""
        return cls(levels=tuple(range(1, 2 * num_levels, 2)))

    @property
    def size(self) -> int:
        return len(self.levels)

    @property
    def squares(self) -> np.ndarray:
        return np.array([a * a for a in self.levels], dtype=np.int64)

    @property
    def bits_per_level(self) -> int:
        return (self.size - 1).bit_length()

    def index_of(self, level: int) -> int:
        return self.levels.index(level)


class DmKind(StrEnum):
    SS = "ss"
    SM = "sm"
    SM_MAX = "sm_max"
    CCDM = "ccdm"
    MB_IID = "mb_iid"


class DmSpec(BaseModel):
    """
    Description of one distribution matcher: k input bits to N amplitudes.

    MB_IID is not a matcher but the infinite-length reference source:
    amplitudes drawn i.i.d. from the Maxwell-Boltzmann law of entropy k/N.
    """
    model_config = ConfigDict(frozen=True)

    kind: DmKind
    n: int = Field(description="Block length in amplitudes")
    k: int = Field(description="Input bits per block")
    alphabet: AmplitudeAlphabet
    shells: int | None = Field(default=None, description="Maximum number of occupied shells for SM")
    composition: tuple[int, ...] | None = Field(default=None, description="Per-level counts for CCDM, aligned with the alphabet")
    e_max: int | None = Field(default=None, description="Sphere energy for SS; minimum feasible sphere when unset")
    seed: int | None = Field(default=None, description="Seed recorded with the spec for reproducible sources")

    @model_validator(mode='after')
    def validate_kind_fields(self) -> 'DmSpec':
        if self.n < 1:
            raise ValueError("Block length must be positive")
        if self.k < 0:
            raise ValueError("Number of input bits must be non-negative")
        if self.kind is DmKind.SM and (self.shells is None or self.shells < 1):
            raise ValueError("SM needs a positive number of shells")
        if self.kind is DmKind.CCDM:
            if self.composition is None:
                raise ValueError("CCDM needs a composition")
            if len(self.composition) != self.alphabet.size:
                raise ValueError("Composition must have one count per alphabet level")
            if any(c < 0 for c in self.composition) or sum(self.composition) != self.n:
                raise ValueError(f"Composition counts must be non-negative and sum to N={self.n}")
        return self

    @classmethod
    def ss(cls, alphabet: AmplitudeAlphabet, n: int, k: int, e_max: int | None = None) -> 'DmSpec':
        return cls(kind=DmKind.SS, n=n, k=k, alphabet=alphabet, e_max=e_max)

    @classmethod
    def sm(cls, alphabet: AmplitudeAlphabet, n: int, k: int, shells: int) -> 'DmSpec':
        return cls(kind=DmKind.SM, n=n, k=k, alphabet=alphabet, shells=shells)

    @classmethod
    def sm_max(cls, alphabet: AmplitudeAlphabet, n: int, k: int) -> 'DmSpec':
        return cls(kind=DmKind.SM_MAX, n=n, k=k, alphabet=alphabet)

    @classmethod
    def ccdm(cls, alphabet: AmplitudeAlphabet, composition: tuple[int, ...], k: int | None = None) -> 'DmSpec':
        """CCDM spec; k defaults to floor(log2) of the number of permutations."""
        n = sum(composition)
        if k is None:
            k = multinomial(composition).bit_length() - 1
        return cls(kind=DmKind.CCDM, n=n, k=k, alphabet=alphabet, composition=tuple(composition))

    @classmethod
    def mb_iid(cls, alphabet: AmplitudeAlphabet, n: int, k: int) -> 'DmSpec':
        return cls(kind=DmKind.MB_IID, n=n, k=k, alphabet=alphabet)

    @property
    def rate(self) -> float:
        """DM rate k/N in bits per amplitude."""
        return self.k / self.n

    @property
    def label(self) -> str:
        match self.kind:
            case DmKind.SM:
                return f"SM-{self.shells}"
            case DmKind.SM_MAX:
                return "SM-max"
            case DmKind.MB_IID:
                return "MB"
            case _:
                return self.kind.value.upper()

    def to_record(self) -> dict:
        """Flat textual record (kind, N, k, levels, shells, composition, e_max, seed)."""
        return {
            "kind": self.kind.value,
            "N": self.n,
            "k": self.k,
            "levels": list(self.alphabet.levels),
            "shells": self.shells,
            "composition": list(self.composition) if self.composition is not None else None,
            "e_max": self.e_max,
            "seed": self.seed,
        }

    @classmethod
    def from_record(cls, record: dict) -> 'DmSpec':
        composition = record.get("composition")
        return cls(
            kind=DmKind(record["kind"]),
            n=int(record["N"]),
            k=int(record["k"]),
            alphabet=AmplitudeAlphabet(levels=tuple(record["levels"])),
            shells=record.get("shells"),
            composition=tuple(composition) if composition is not None else None,
            e_max=record.get("e_max"),
            seed=record.get("seed"),
        )

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_record(), sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> 'DmSpec':
        return cls.from_record(yaml.safe_load(text))


def multinomial(counts: tuple[int, ...] | list[int]) -> int:
    """Number of distinct permutations of a sequence with the given composition."""
    total = 0
    result = 1
    for c in counts:
        total += c
        result *= comb(total, c)
    return result


@dataclass(frozen=True)
class AmplitudeBlock:
    """One DM output: N amplitude levels."""
    amplitudes: tuple[int, ...]

    @classmethod
    def of(cls, amplitudes) -> 'AmplitudeBlock':
        return cls(tuple(int(a) for a in amplitudes))

    @property
    def energy(self) -> int:
        return sum(a * a for a in self.amplitudes)

    def __len__(self) -> int:
        return len(self.amplitudes)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.amplitudes, dtype=np.int64)


@dataclass(frozen=True)
class ShellSupport:
    """Per-sequence energies admitted by a DM and the number of sequences in each."""
    energies: tuple[int, ...]
    counts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __contains__(self, energy: int) -> bool:
        return energy in self.energies


def composition_energy(alphabet: AmplitudeAlphabet, composition: tuple[int, ...]) -> int:
    return sum(c * a * a for c, a in zip(composition, alphabet.levels))

