"""
Fixed-particle-number Fock space of two bosonic modes.

Basis vector ``i`` is |n_a = i, n_b = 2j - i>, i.e. the Dicke state |j, k> with
k = i - j. All modules share this ascending-n_a ordering.

The Hamiltonian is stored as a Hermitian band (diagonal plus two
sub-diagonals, ``band[d, n] = H[n + d, n]``). The ladder-word oracle
``apply_word`` is the reference the band formulas are tested against.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .errors import BasisMismatch, ProjectionOutOfRange, SectorViolation
from .model import CanonicalParams

logger = logging.getLogger(__name__)


# ==================================================
# 1. BASIS AND STATES
# ==================================================

@dataclass(frozen=True)
class FockBasis:
    """
    Sector of 2j particles; dimension 2j + 1.
    """
    two_j: int

    def __post_init__(self):
        if self.two_j < 0:
            raise ValueError("two_j must be nonnegative")

    @property
    def dim(self) -> int:
        return self.two_j + 1

    @property
    def n_a(self) -> np.ndarray:
        return np.arange(self.dim)

    @property
    def n_b(self) -> np.ndarray:
        return self.two_j - np.arange(self.dim)

    @property
    def two_k(self) -> np.ndarray:
        """Twice the projection k for every basis vector."""
        return 2 * np.arange(self.dim) - self.two_j

    @property
    def k(self) -> np.ndarray:
        return self.two_k / 2.0

    def index_of(self, two_k: int) -> int:
        """
        Basis index of the Dicke state with projection two_k / 2.

        Raises:
            ProjectionOutOfRange: When |k| > j or 2k has the wrong parity
        """
        if abs(two_k) > self.two_j or (two_k - self.two_j) % 2 != 0:
            raise ProjectionOutOfRange(self.two_j, two_k)
        return (two_k + self.two_j) // 2

    def check_same(self, other: "FockBasis") -> None:
        if other.two_j != self.two_j:
            raise BasisMismatch(self.two_j, other.two_j)


@dataclass(frozen=True)
class StateVector:
    """
    Complex amplitudes over a Fock basis.
    """
    basis: FockBasis
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.basis.dim,):
            raise ValueError(f"expected {self.basis.dim} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amps", amps)

    @classmethod
    def basis_state(cls, basis: FockBasis, two_k: int) -> "StateVector":
        amps = np.zeros(basis.dim, dtype=complex)
        amps[basis.index_of(two_k)] = 1.0
        return cls(basis, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        norm = self.norm()
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.basis, self.amps / norm)


# ==================================================
# 2. HERMITIAN OPERATORS
# ==================================================

@dataclass(frozen=True)
class HermitianOperator:
    """
    Hermitian matrix on a Fock basis.

    Either ``band`` (shape (3, dim), lower storage) or ``matrix`` (dense) is
    set. ``phase`` records phi when every band entry at offset d carries the
    factor e^{i d phi}; the eigensolver uses it to reduce to a real problem.
    """
    basis: FockBasis
    band: Optional[np.ndarray] = None
    matrix: Optional[np.ndarray] = None
    phase: Optional[float] = None
    _dense_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if (self.band is None) == (self.matrix is None):
            raise ValueError("exactly one of band or matrix must be given")
        if self.band is not None:
            band = np.array(self.band, dtype=complex)
            if band.shape != (3, self.basis.dim):
                raise ValueError(f"band must have shape (3, {self.basis.dim})")
            band[0] = band[0].real
            object.__setattr__(self, "band", band)
        else:
            m = np.asarray(self.matrix, dtype=complex)
            if m.shape != (self.basis.dim, self.basis.dim):
                raise ValueError("matrix shape does not match the basis")
            object.__setattr__(self, "matrix", (m + m.conj().T) / 2.0)

    @classmethod
    def from_dense(cls, basis: FockBasis, matrix: np.ndarray) -> "HermitianOperator":
        return cls(basis=basis, matrix=matrix)

    @property
    def is_banded(self) -> bool:
        return self.band is not None

    def dense(self) -> np.ndarray:
        """Full matrix view (cached)."""
        if self.matrix is not None:
            return self.matrix
        if "dense" not in self._dense_cache:
            dim = self.basis.dim
            h = np.zeros((dim, dim), dtype=complex)
            for d in range(3):
                if d >= dim:
                    break
                idx = np.arange(dim - d)
                h[idx + d, idx] = self.band[d, : dim - d]
                h[idx, idx + d] = np.conj(self.band[d, : dim - d])
            self._dense_cache["dense"] = h
        return self._dense_cache["dense"]

    def max_abs(self) -> float:
        if self.band is not None:
            return float(np.max(np.abs(self.band))) if self.band.size else 0.0
        return float(np.max(np.abs(self.matrix))) if self.matrix.size else 0.0

    def matvec(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if self.matrix is not None:
            return self.matrix @ v
        dim = self.basis.dim
        y = self.band[0] * v
        for d in (1, 2):
            if d >= dim:
                break
            lower = self.band[d, : dim - d]
            y[d:] += lower * v[: dim - d]
            y[: dim - d] += np.conj(lower) * v[d:]
        return y

    def expectation(self, s: StateVector) -> float:
        self.basis.check_same(s.basis)
        return float(np.vdot(s.amps, self.matvec(s.amps)).real)


# ==================================================
# 3. LADDER WORDS
# ==================================================

class Ladder(str, Enum):
    """Single-mode ladder operators."""
    A = "a"
    A_DAG = "a+"
    B = "b"
    B_DAG = "b+"


_NET = {Ladder.A: -1, Ladder.A_DAG: 1, Ladder.B: -1, Ladder.B_DAG: 1}


@dataclass(frozen=True)
class OperatorWord:
    """
    Product of ladder operators with a complex prefactor; applied right to left.
    """
    symbols: Tuple[Ladder, ...]
    prefactor: complex = 1.0

    @classmethod
    def parse(cls, text: str, prefactor: complex = 1.0) -> "OperatorWord":
        """Build a word from space-separated symbols, e.g. ``"a+ a+ b b"``."""
        return cls(tuple(Ladder(sym) for sym in text.split()), prefactor)

    @property
    def net_count(self) -> int:
        return sum(_NET[sym] for sym in self.symbols)

    def __str__(self) -> str:
        return " ".join(sym.value for sym in self.symbols) or "1"


def apply_word(w: OperatorWord, s: StateVector) -> StateVector:
    """
    Apply a ladder word to a state with exact bosonic algebra.

    Args:
        w (OperatorWord): Word with zero net particle count
        s (StateVector): Input state

    Returns:
        StateVector: Image, not normalized (possibly zero)

    Raises:
        SectorViolation: When the word changes the particle number
    """
    if w.net_count != 0:
        raise SectorViolation(str(w), w.net_count)

    basis = s.basis
    na = basis.n_a.astype(float)
    nb = basis.n_b.astype(float)
    amp = s.amps * complex(w.prefactor)

    for sym in reversed(w.symbols):
        if sym is Ladder.A:
            amp = amp * np.sqrt(np.maximum(na, 0.0))
            na = na - 1.0
        elif sym is Ladder.A_DAG:
            amp = amp * np.sqrt(np.maximum(na + 1.0, 0.0))
            na = na + 1.0
        elif sym is Ladder.B:
            amp = amp * np.sqrt(np.maximum(nb, 0.0))
            nb = nb - 1.0
        else:
            amp = amp * np.sqrt(np.maximum(nb + 1.0, 0.0))
            nb = nb + 1.0

    out = np.zeros(basis.dim, dtype=complex)
    valid = (na >= 0) & (nb >= 0) & (amp != 0)
    np.add.at(out, na[valid].astype(int), amp[valid])
    return StateVector(basis, out)


def hamiltonian_words(c: CanonicalParams) -> List[OperatorWord]:
    """
    Every term of the two-mode Hamiltonian as a ladder word.
    """
    e1 = complex(math.cos(c.phi), math.sin(c.phi))
    e2 = e1 * e1
    return [
        OperatorWord((), c.a0),
        OperatorWord.parse("a+ a", c.delta_omega),
        OperatorWord.parse("b+ b", -c.delta_omega),
        OperatorWord.parse("a+ b", c.lam * e1),
        OperatorWord.parse("a b+", c.lam * e1.conjugate()),
        OperatorWord.parse("a+ b+ a b", c.u_cross),
        OperatorWord.parse("a+ a+ b b", c.lambda2 * e2),
        OperatorWord.parse("b+ b+ a a", c.lambda2 * e2.conjugate()),
        OperatorWord.parse("a+ a+ a b", c.mu * e1),
        OperatorWord.parse("a+ b+ b b", -c.mu * e1),
        OperatorWord.parse("b+ a+ a a", c.mu * e1.conjugate()),
        OperatorWord.parse("b+ b+ b a", -c.mu * e1.conjugate()),
    ]


def assemble_from_words(words: Iterable[OperatorWord], basis: FockBasis) -> np.ndarray:
    """
    Dense matrix of a sum of words, column by column.
    """
    words = list(words)
    h = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i in range(basis.dim):
        e_i = StateVector(basis, np.eye(basis.dim, dtype=complex)[i])
        for w in words:
            h[:, i] += apply_word(w, e_i).amps
    return h


# ==================================================
# 4. HAMILTONIAN CONSTRUCTION
# ==================================================

def build_hamiltonian(c: CanonicalParams) -> HermitianOperator:
    """
    Banded matrix of the two-mode Hamiltonian on the 2j-particle sector.

    Closed-form band (n = n_a, N = 2j):
      diagonal        a0 + delta_omega (2n - N) + u_cross n (N - n)
      offset 1        e^{i phi} [lam + mu (2n + 1 - N)] sqrt((n + 1)(N - n))
      offset 2        lambda2 e^{2i phi} sqrt((n + 1)(n + 2)(N - n)(N - n - 1))

    Args:
        c (CanonicalParams): Hamiltonian coefficients

    Returns:
        HermitianOperator: Band storage with the phase recorded
    """
    for w in hamiltonian_words(c):
        if w.net_count != 0:
            raise SectorViolation(str(w), w.net_count)

    basis = FockBasis(c.two_j)
    big_n = float(c.two_j)
    n = basis.n_a.astype(float)
    e1 = complex(math.cos(c.phi), math.sin(c.phi))

    band = np.zeros((3, basis.dim), dtype=complex)
    band[0] = c.a0 + c.delta_omega * (2.0 * n - big_n) + c.u_cross * n * (big_n - n)
    band[1] = e1 * (c.lam + c.mu * (2.0 * n + 1.0 - big_n)) * np.sqrt(np.maximum((n + 1.0) * (big_n - n), 0.0))
    band[2] = c.lambda2 * e1 * e1 * np.sqrt(
        np.maximum((n + 1.0) * (n + 2.0) * (big_n - n) * (big_n - n - 1.0), 0.0)
    )
    # entries that would couple past the top of the sector
    band[1, max(basis.dim - 1, 0):] = 0.0
    band[2, max(basis.dim - 2, 0):] = 0.0

    logger.debug(f"Built banded Hamiltonian for two_j={c.two_j}")
    return HermitianOperator(basis=basis, band=band, phase=c.phi)


def m_operator(basis: FockBasis) -> HermitianOperator:
    """Relative population a+a - b+b (entries 2k)."""
    band = np.zeros((3, basis.dim), dtype=complex)
    band[0] = basis.two_k
    return HermitianOperator(basis=basis, band=band, phase=0.0)


def jz_operator(basis: FockBasis) -> HermitianOperator:
    """Pseudo-spin projection Jz (entries k)."""
    band = np.zeros((3, basis.dim), dtype=complex)
    band[0] = basis.k
    return HermitianOperator(basis=basis, band=band, phase=0.0)


def raising_matrix(basis: FockBasis) -> np.ndarray:
    """Dense matrix of a+b (= J+)."""
    dim = basis.dim
    h = np.zeros((dim, dim), dtype=complex)
    idx = np.arange(dim - 1)
    h[idx + 1, idx] = np.sqrt((idx + 1.0) * (basis.two_j - idx))
    return h
