"""Rate, energy and target-distribution statistics of distribution matchers."""
import logging
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from pas_npn_lab.core.config import shaping_config
from pas_npn_lab.core.errors import CapacityError, ShapingError
from pas_npn_lab.shaping.matchers import get_matcher
from pas_npn_lab.shaping.models import AmplitudeAlphabet, DmKind, DmSpec, multinomial

logger = logging.getLogger(__name__)


def entropy_bits(probabilities: np.ndarray) -> float:
    p = np.asarray(probabilities, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def maxwell_boltzmann(alphabet: AmplitudeAlphabet, nu: float) -> np.ndarray:
    """P(a) proportional to exp(-nu * a^2)."""
    squares = alphabet.squares.astype(float)
    logits = -nu * (squares - squares[0])
    weights = np.exp(logits)
    return weights / weights.sum()


def _nu_bracket(alphabet: AmplitudeAlphabet, f, target: float) -> float:
    high = 1.0 / alphabet.squares[-1]
    while f(high) > target:
        high *= 2.0
        if high > 1e6:
            raise ShapingError(f"No MB distribution reaches {target=}")
    return high


def mb_for_entropy(alphabet: AmplitudeAlphabet, entropy: float) -> np.ndarray:
    """MB distribution over the alphabet with the given entropy (bits)."""
    max_entropy = np.log2(alphabet.size)
    if not 0 < entropy <= max_entropy + 1e-12:
        raise ShapingError(f"{entropy=} outside (0, {max_entropy}]")
    if entropy >= max_entropy - 1e-12:
        return maxwell_boltzmann(alphabet, 0.0)

    def h(nu: float) -> float:
        return entropy_bits(maxwell_boltzmann(alphabet, nu))

    nu = brentq(lambda x: h(x) - entropy, 0.0, _nu_bracket(alphabet, h, entropy), xtol=1e-14)
    return maxwell_boltzmann(alphabet, nu)


def mb_for_energy(alphabet: AmplitudeAlphabet, energy: float) -> np.ndarray:
    """MB distribution over the alphabet with average energy E[a^2] = energy."""
    squares = alphabet.squares.astype(float)
    uniform_energy = squares.mean()
    if not squares[0] < energy <= uniform_energy + 1e-12:
        raise ShapingError(f"{energy=} outside ({squares[0]}, {uniform_energy}]")
    if energy >= uniform_energy - 1e-12:
        return maxwell_boltzmann(alphabet, 0.0)

    def e(nu: float) -> float:
        return float(maxwell_boltzmann(alphabet, nu) @ squares)

    nu = brentq(lambda x: e(x) - energy, 0.0, _nu_bracket(alphabet, e, energy), xtol=1e-14)
    return maxwell_boltzmann(alphabet, nu)


def ccdm_composition(target: np.ndarray, n: int) -> tuple[int, ...]:
    """Quantize a target distribution to integer counts summing to n by largest remainder."""
    target = np.asarray(target, dtype=float)
    scaled = target * n
    counts = np.floor(scaled).astype(int)
    shortfall = n - int(counts.sum())
    # ties resolved towards lower levels
    order = np.argsort(-(scaled - counts), kind="stable")
    counts[order[:shortfall]] += 1
    return tuple(int(c) for c in counts)


def image_marginal(spec: DmSpec) -> np.ndarray:
    """Empirical amplitude distribution over the 2^k image sequences."""
    if spec.kind is DmKind.MB_IID:
        return mb_for_entropy(spec.alphabet, spec.rate)
    counts = get_matcher(spec).image_level_counts()
    total = sum(counts)
    return np.array([float(Fraction(c, total)) for c in counts])


def average_sequence_energy(spec: DmSpec) -> float:
    """Mean per-sequence energy E_DM with uniform weighting over the image."""
    if spec.kind is DmKind.MB_IID:
        return float(spec.n * (image_marginal(spec) @ spec.alphabet.squares))
    counts = get_matcher(spec).image_level_counts()
    total = sum(c * a * a for c, a in zip(counts, spec.alphabet.levels))
    return float(Fraction(total, 1 << spec.k))


def dm_rate_loss(spec: DmSpec, target: np.ndarray | str | None = None) -> float:
    """
    H(target) - k/N in bits per amplitude.

    ``target`` may be an explicit distribution, ``"mb"`` for the MB law with the
    DM's average energy, or None for the DM's empirical marginal.
    """
    marginal = image_marginal(spec)
    match target:
        case None:
            distribution = marginal
        case "mb":
            energy = float(marginal @ spec.alphabet.squares)
            distribution = mb_for_energy(spec.alphabet, energy)
        case str():
            raise ValueError(f"Unknown target {target!r}")
        case _:
            distribution = np.asarray(target, dtype=float)
    loss = entropy_bits(distribution) - spec.rate
    if -shaping_config.rate_loss_tolerance < loss < 0:
        loss = 0.0
    return loss


def rate_matched_spec(kind: DmKind, alphabet: AmplitudeAlphabet, n: int,
                      rate: float = 2.0, shells: int = 2, nu_steps: int = 200) -> DmSpec:
    """
    DM spec of the given kind operating at ``rate`` bits per amplitude (k = rate*N).

    CCDM scans MB shaping parameters from the entropy-matched one down to
    uniform and keeps the lowest-energy largest-remainder composition with at
    least 2^k permutations.
    """
    k = round(rate * n)
    if abs(k - rate * n) > 1e-9:
        raise ShapingError(f"{rate=} * {n=} is not an integer number of bits")
    match kind:
        case DmKind.SS:
            return DmSpec.ss(alphabet, n, k)
        case DmKind.SM:
            return DmSpec.sm(alphabet, n, k, shells)
        case DmKind.SM_MAX:
            return DmSpec.sm_max(alphabet, n, k)
        case DmKind.MB_IID:
            return DmSpec.mb_iid(alphabet, n, k)
        case DmKind.CCDM:
            squares = alphabet.squares.astype(float)
            uniform = maxwell_boltzmann(alphabet, 0.0)
            start = mb_for_entropy(alphabet, rate) if rate < np.log2(alphabet.size) else uniform
            nu_start = float(np.log(start[0] / start[-1]) / (squares[-1] - squares[0]))
            best: tuple[int, ...] | None = None
            best_energy = np.inf
            for nu in np.linspace(nu_start, 0.0, nu_steps):
                composition = ccdm_composition(maxwell_boltzmann(alphabet, nu), n)
                if multinomial(composition) < (1 << k):
                    continue
                energy = float(np.dot(composition, squares))
                if energy < best_energy:
                    best, best_energy = composition, energy
            if best is None:
                raise CapacityError(f"No composition of length {n} supports {k} bits")
            logger.debug(f"CCDM {n=} {k=}: composition {best}")
            return DmSpec.ccdm(alphabet, best, k)
    raise ShapingError(f"Unknown DM kind {kind}")
