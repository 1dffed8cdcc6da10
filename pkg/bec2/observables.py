"""
Measurements on fixed-number states: number distributions, relative
population, mode entanglement and peak counting.
"""

import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.signal import find_peaks
from scipy.stats import entropy

from .errors import SizeExceeded
from .exact import wigner_row
from .fock import FockBasis, StateVector
from .model import Units

logger = logging.getLogger(__name__)

# Largest two_j for the explicit two-mode partial trace.
PARTIAL_TRACE_LIMIT_TWO_J = 20

DEFAULT_PROMINENCE_FLOOR = 1e-6


# ==================================================
# 1. VALUE TYPES
# ==================================================

@dataclass(frozen=True)
class ProbabilityRow:
    """
    Nonnegative probabilities over k (ascending), summing to one.
    """
    basis: FockBasis
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.basis.dim,):
            raise ValueError("probabilities do not match the basis")
        if np.any(probs < 0.0):
            raise ValueError("probabilities must be nonnegative")
        total = float(np.sum(probs))
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "probs", probs)


class EntropyValue(BaseModel):
    """Von Neumann entropy of one mode, in bits."""

    model_config = ConfigDict(frozen=True)

    bits: float = Field(ge=0.0)

    @field_validator("bits", mode="before")
    @classmethod
    def clamp_rounding(cls, v: float) -> float:
        # -0.0 and rounding residue from sums of p log p
        return 0.0 if -1e-12 < v < 0.0 else v


# ==================================================
# 2. DISTRIBUTIONS AND MEANS
# ==================================================

def number_distribution(s: StateVector) -> ProbabilityRow:
    """probs[k] = |amps[n_a = j + k]|^2."""
    return ProbabilityRow(s.basis, np.abs(s.amps) ** 2)


def mean_m(s: StateVector, units: Union[Units, str] = Units.PHYSICAL) -> float:
    """
    Relative population <a+a - b+b> (physical) or <Jz> (paper units).
    """
    p = number_distribution(s)
    return Units(units).factor * float(np.dot(s.basis.k, p.probs))


def mean_jz(s: StateVector) -> float:
    return mean_m(s, Units.PAPER)


# ==================================================
# 3. MODE ENTANGLEMENT
# ==================================================

def entanglement_entropy(s: StateVector) -> EntropyValue:
    """
    Entropy of mode a's reduced state.

    With the particle number fixed the reduced state is diagonal in the
    number basis, so the entropy is the Shannon entropy of the number
    distribution (0 log 0 = 0).

    Args:
        s (StateVector): Normalized state

    Returns:
        EntropyValue: Entropy in bits
    """
    p = number_distribution(s)
    return EntropyValue(bits=float(entropy(p.probs, base=2)))


def ground_entropy(theta: float, two_j: int, two_k0: int, phi: float = 0.0) -> EntropyValue:
    """
    Mode entanglement of the eigenstate U(theta, phi)|j, k0>.

    phi only multiplies amplitudes by phases and drops out.

    Raises:
        ProjectionOutOfRange: When |k0| > j
    """
    row = wigner_row(two_j, two_k0, theta)
    return EntropyValue(bits=float(entropy(row.probabilities, base=2)))


def partial_trace_entropy(s: StateVector) -> EntropyValue:
    """
    Entropy from an explicit two-mode embedding and partial trace.

    Builds psi[n_a, n_b], forms rho_a = psi psi+ and diagonalizes it. Kept as
    a cross-check of ``entanglement_entropy`` for small sectors.

    Raises:
        SizeExceeded: When two_j exceeds PARTIAL_TRACE_LIMIT_TWO_J
    """
    two_j = s.basis.two_j
    if two_j > PARTIAL_TRACE_LIMIT_TWO_J:
        raise SizeExceeded(two_j, PARTIAL_TRACE_LIMIT_TWO_J)
    dim = two_j + 1
    joint = np.zeros((dim, dim), dtype=complex)
    joint[s.basis.n_a, s.basis.n_b] = s.amps
    rho_a = joint @ joint.conj().T
    weights = np.clip(np.linalg.eigvalsh(rho_a), 0.0, None)
    return EntropyValue(bits=float(entropy(weights, base=2)))


# ==================================================
# 4. PEAK COUNTING
# ==================================================

def find_distribution_peaks(p: ProbabilityRow, prominence_floor: float = DEFAULT_PROMINENCE_FLOOR) -> np.ndarray:
    """
    Indices of the local maxima higher than prominence_floor * max(probs).

    The row is padded so maxima at either end count; a plateau is reported
    once, at its leftmost index.
    """
    if prominence_floor <= 0.0:
        raise ValueError("prominence_floor must be positive")
    probs = p.probs
    padded = np.concatenate([[-1.0], probs, [-1.0]])
    _, properties = find_peaks(padded, plateau_size=1)
    left = properties["left_edges"] - 1
    return left[probs[left] > prominence_floor * float(np.max(probs))]


def count_peaks(p: ProbabilityRow, prominence_floor: float = DEFAULT_PROMINENCE_FLOOR) -> int:
    """
    Number of local maxima of a distribution above the relative floor.

    Args:
        p (ProbabilityRow): Distribution over k
        prominence_floor (float): Relative height threshold, > 0

    Returns:
        int: Peak count (1 for a delta row)
    """
    peaks = find_distribution_peaks(p, prominence_floor)
    logger.debug(f"Found {peaks.size} peaks above {prominence_floor:.1e} of the maximum")
    return int(peaks.size)


def entropy_upper_bound(two_j: int) -> float:
    """log2(2j + 1), reached by the uniform distribution."""
    return math.log2(two_j + 1)
