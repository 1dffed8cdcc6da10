"""
Numerical path: Hermitian eigensolver, SU(2) rotation, conjugation oracle and
spectral time evolution (hbar = 1).

The rotation convention is

    U(theta, phi) = exp[(theta/2)(e^{-i phi} J- - e^{i phi} J+)]
                  = exp(i phi Jz) exp(-i theta Jy) exp(-i phi Jz)

with J+ = a+b. Then U Jz U+ = cos(theta) Jz + sin(theta) (e^{i phi} J+ + e^{-i phi} J-)/2,
so conjugating A1 Jz + A2 Jz^2 yields lam = +A1 sin(theta)/2 and the eigenstates
of the solvable Hamiltonian are U|j, k>.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, SizeExceeded
from .fock import FockBasis, HermitianOperator, StateVector, raising_matrix
from .model import ExactParams
from .settings import get_settings

logger = logging.getLogger(__name__)

# Imaginary residue tolerated when a phased band is reduced to a real one.
_REAL_REDUCTION_TOL = 1e-14


# ==================================================
# 1. DECOMPOSITION TYPES
# ==================================================

@dataclass(frozen=True)
class SpectralDecomposition:
    """
    Eigenvalues (ascending) and orthonormal eigenvectors (columns).
    """
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis: FockBasis

    def ground_indices(self, rel_tol: float = 1e-10, scale: Optional[float] = None) -> np.ndarray:
        """
        Indices of every eigenvalue within rel_tol * scale of the lowest one.
        """
        if scale is None:
            scale = float(np.max(np.abs(self.eigenvalues))) if self.eigenvalues.size else 0.0
        e0 = self.eigenvalues[0]
        return np.flatnonzero(self.eigenvalues - e0 <= rel_tol * max(scale, 1e-300))

    def state(self, index: int) -> StateVector:
        return StateVector(self.basis, self.eigenvectors[:, index])

    def coefficients(self, s: StateVector) -> np.ndarray:
        """Components of a state in the eigenbasis."""
        self.basis.check_same(s.basis)
        return self.eigenvectors.conj().T @ s.amps


@dataclass(frozen=True)
class RotationSpec:
    """
    Parameters of U(theta, phi) on the 2j sector.
    """
    theta: float
    phi: float
    two_j: int

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError("theta must lie in [0, pi]")


# ==================================================
# 2. EIGENSOLVER
# ==================================================

def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Make each column's largest-magnitude entry real and positive."""
    if vectors.size == 0:
        return vectors
    pivots = np.argmax(np.abs(vectors), axis=0)
    pivot_values = vectors[pivots, np.arange(vectors.shape[1])]
    phases = pivot_values / np.abs(pivot_values)
    return vectors * phases.conj()[np.newaxis, :]


def _real_band(h: HermitianOperator) -> Optional[np.ndarray]:
    """
    Real band of D+ H D with D = diag(e^{i n phi}), when H has that structure.
    """
    if h.phase is None:
        return None
    offsets = np.arange(3)[:, np.newaxis]
    rotated = h.band * np.exp(-1j * offsets * h.phase)
    scale = float(np.max(np.abs(rotated))) if rotated.size else 0.0
    if np.max(np.abs(rotated.imag), initial=0.0) > _REAL_REDUCTION_TOL * max(scale, 1.0):
        return None
    return rotated.real


def eigh(h: HermitianOperator) -> SpectralDecomposition:
    """
    Full Hermitian eigendecomposition.

    Banded operators go through LAPACK's banded driver; when every entry at
    offset d carries e^{i d phi}, the phases are absorbed into a diagonal
    unitary and the real symmetric problem is solved instead. Eigenvalues
    come back ascending and each eigenvector's largest entry is made real
    and positive.

    Args:
        h (HermitianOperator): Operator to diagonalize

    Returns:
        SpectralDecomposition: Eigenpairs on h's basis

    Raises:
        ConvergenceFailure: When LAPACK reports non-convergence
    """
    basis = h.basis
    try:
        if h.is_banded:
            real_band = _real_band(h)
            if real_band is not None:
                values, vectors = scipy.linalg.eig_banded(real_band, lower=True)
                phases = np.exp(1j * h.phase * basis.n_a)
                vectors = phases[:, np.newaxis] * vectors
            else:
                values, vectors = scipy.linalg.eig_banded(h.band, lower=True)
        else:
            values, vectors = scipy.linalg.eigh(h.dense())
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(message=f"Eigensolver failed for two_j={basis.two_j}: {exc}") from exc

    vectors = _fix_phases(np.asarray(vectors, dtype=complex))
    logger.debug(f"Diagonalized dim={basis.dim}, spectrum [{values[0]:.6g}, {values[-1]:.6g}]")
    return SpectralDecomposition(eigenvalues=np.asarray(values, dtype=float), eigenvectors=vectors, basis=basis)


# ==================================================
# 3. ROTATIONS AND THE CONJUGATION ORACLE
# ==================================================

def rotation_generator(r: RotationSpec) -> np.ndarray:
    """Anti-Hermitian generator (theta/2)(e^{-i phi} J- - e^{i phi} J+)."""
    j_plus = raising_matrix(FockBasis(r.two_j))
    e1 = np.exp(1j * r.phi)
    return 0.5 * r.theta * (np.conj(e1) * j_plus.conj().T - e1 * j_plus)


def rotation_unitary(r: RotationSpec) -> np.ndarray:
    """
    Dense U(theta, phi); U(0, phi) is the identity.
    """
    if r.theta == 0.0:
        return np.eye(r.two_j + 1, dtype=complex)
    return scipy.linalg.expm(rotation_generator(r))


def conjugate_oracle(x: ExactParams) -> HermitianOperator:
    """
    U (A1 Jz + A2 Jz^2) U+ by dense matrix exponential.

    Args:
        x (ExactParams): Manifold point

    Returns:
        HermitianOperator: Dense operator

    Raises:
        SizeExceeded: When two_j exceeds the dense oracle limit
    """
    limit = get_settings().dense_limit_two_j
    if x.two_j > limit:
        raise SizeExceeded(x.two_j, limit)
    basis = FockBasis(x.two_j)
    k = basis.k
    h0 = np.diag(x.a1 * k + x.a2 * k * k).astype(complex)
    u = rotation_unitary(RotationSpec(theta=x.theta, phi=x.phi, two_j=x.two_j))
    return HermitianOperator.from_dense(basis, u @ h0 @ u.conj().T)


# ==================================================
# 4. TIME EVOLUTION
# ==================================================

def evolve(d: SpectralDecomposition, s0: StateVector, t: float) -> StateVector:
    """
    s(t) = V exp(-i E t) V+ s0.

    Raises:
        BasisMismatch: When s0 lives on another sector
    """
    coeffs = d.coefficients(s0)
    if t == 0.0:
        return StateVector(s0.basis, s0.amps.copy())
    return StateVector(d.basis, d.eigenvectors @ (np.exp(-1j * d.eigenvalues * t) * coeffs))


def evolve_many(d: SpectralDecomposition, s0: StateVector, times: Sequence[float]) -> np.ndarray:
    """
    Amplitudes at every time, shape (len(times), dim).
    """
    coeffs = d.coefficients(s0)
    times = np.asarray(times, dtype=float)
    phases = np.exp(-1j * np.outer(times, d.eigenvalues))
    return (phases * coeffs[np.newaxis, :]) @ d.eigenvectors.T
