"""
Closed-form solution on the solvable manifold.

Eigenstates are U(theta, phi)|j, k> with energies a1 k + a2 k^2, so everything
here reduces to Wigner small-d rows

    d^j_{k,k0}(theta) = <j, k| exp(-i theta Jy) |j, k0>

and to arithmetic on the quadratic spectrum (collapse times, revival periods).
"""

import logging
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse
import sympy
from pydantic import BaseModel, ConfigDict, Field
from scipy.sparse.linalg import expm_multiply
from scipy.stats import binom

from .errors import AllDegenerate, BadCoefficients, BasisMismatch, NoCollisions, NotPeriodic
from .fock import FockBasis, StateVector
from .model import ExactParams, Units

logger = logging.getLogger(__name__)

WignerMethod = Literal["recurrence", "generator-exponential"]

# Rescaling threshold for the unnormalized recurrence branches.
_RESCALE = 1e100

# Largest accepted denominator when reconstructing a1/a2 from floats.
MAX_DENOMINATOR = 10 ** 6

# Allowed deviation of a float ratio from its reconstruction, in ulps.
RATIONAL_ULPS = 8


# ==================================================
# 1. WIGNER SMALL-D ROWS
# ==================================================

@dataclass(frozen=True)
class WignerRow:
    """
    Amplitudes d^j_{k,k0}(theta) over the target projection k (ascending).
    """
    two_j: int
    two_k0: int
    theta: float
    amps: np.ndarray
    method: WignerMethod = "recurrence"

    @property
    def probabilities(self) -> np.ndarray:
        return self.amps * self.amps


def _ladder_factors(two_j: int) -> np.ndarray:
    """<k+1|J+|k> for every basis index but the last."""
    i = np.arange(two_j, dtype=float)
    return np.sqrt((i + 1.0) * (two_j - i))


def _recurrence_row(two_j: int, two_k0: int, theta: float) -> np.ndarray:
    """
    Column k0 of d^j(theta) from the eigen-equation of cos(theta) Jz + sin(theta) Jx.

    The three-term recurrence is run inward from both ends, where the row
    decays, and the two branches are matched near k = k0 cos(theta), which
    always lies in the oscillatory region.
    """
    n = two_j + 1
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    k = np.arange(n) - two_j / 2.0
    diag = k * cos_t - two_k0 / 2.0
    off = 0.5 * sin_t * _ladder_factors(two_j)

    m = int(np.clip(round(two_k0 / 2.0 * cos_t + two_j / 2.0), 0, n - 2))

    up = np.zeros(n)
    up[0] = 1.0
    for i in range(m + 1):
        below = off[i - 1] * up[i - 1] if i > 0 else 0.0
        up[i + 1] = -(diag[i] * up[i] + below) / off[i]
        if abs(up[i + 1]) > _RESCALE:
            up[: i + 2] /= _RESCALE

    down = np.zeros(n)
    down[n - 1] = -1.0 if ((two_j - two_k0) // 2) % 2 else 1.0
    for i in range(n - 1, m, -1):
        above = off[i] * down[i + 1] if i < n - 1 else 0.0
        down[i - 1] = -(diag[i] * down[i] + above) / off[i - 1]
        if abs(down[i - 1]) > _RESCALE:
            down[i - 1:] /= _RESCALE

    overlap = slice(m, m + 2)
    ratio = np.dot(up[overlap], down[overlap]) / np.dot(up[overlap], up[overlap])
    row = np.concatenate([ratio * up[: m + 1], down[m + 1:]])
    return row / np.linalg.norm(row)


def _generator_row(two_j: int, two_k0: int, theta: float) -> np.ndarray:
    """exp[(theta/2)(J- - J+)] applied to the k0 basis vector."""
    n = two_j + 1
    c = 0.5 * theta * _ladder_factors(two_j)
    generator = scipy.sparse.diags([c, -c], offsets=[1, -1], shape=(n, n), format="csr")
    start = np.zeros(n)
    start[(two_k0 + two_j) // 2] = 1.0
    row = expm_multiply(generator, start)
    return row / np.linalg.norm(row)


def wigner_row(two_j: int, two_k0: int, theta: float, method: WignerMethod = "recurrence") -> WignerRow:
    """
    Row d^j_{k,k0}(theta) over all k, i.e. <j,k| U(theta, 0) |j,k0>.

    The default method is a two-sided three-term recurrence, stable for j in
    the 1e5 range. The generator exponential is kept as an independent route.

    Args:
        two_j (int): Twice the spin
        two_k0 (int): Twice the source projection
        theta (float): Rotation angle in [0, pi]
        method (str): "recurrence" or "generator-exponential"

    Returns:
        WignerRow: Unit-norm row

    Raises:
        ProjectionOutOfRange: When |k0| > j or the parity is wrong
    """
    basis = FockBasis(two_j)
    i0 = basis.index_of(two_k0)
    if not 0.0 <= theta <= math.pi:
        raise ValueError("theta must lie in [0, pi]")

    if basis.dim == 1 or theta == 0.0:
        amps = np.zeros(basis.dim)
        amps[i0] = 1.0
    elif theta >= math.pi:
        amps = np.zeros(basis.dim)
        amps[basis.dim - 1 - i0] = -1.0 if ((two_j - two_k0) // 2) % 2 else 1.0
    elif method == "recurrence":
        amps = _recurrence_row(two_j, two_k0, theta)
    elif method == "generator-exponential":
        amps = _generator_row(two_j, two_k0, theta)
    else:
        raise ValueError(f"unknown method '{method}'")
    return WignerRow(two_j=two_j, two_k0=two_k0, theta=theta, amps=amps, method=method)


def binomial_row(two_j: int, theta: float) -> np.ndarray:
    """
    Probabilities of the rotated top state: P(k) = Binom(j + k; 2j, cos^2(theta/2)).
    """
    successes = np.arange(two_j + 1)
    return binom.pmf(successes, two_j, math.cos(theta / 2.0) ** 2)


def wigner_element_reference(two_j: int, two_k: int, two_k0: int, theta: float, digits: int = 50) -> float:
    """
    d^j_{k,k0}(theta) from the alternating factorial sum, in extended precision.

    Cross-check only: the sum cancels catastrophically in double precision
    beyond j of about 15.
    """
    j_plus_k, j_minus_k = (two_j + two_k) // 2, (two_j - two_k) // 2
    j_plus_k0, j_minus_k0 = (two_j + two_k0) // 2, (two_j - two_k0) // 2
    shift = (two_k - two_k0) // 2

    half = sympy.Float(theta, digits) / 2
    cos_h, sin_h = sympy.cos(half), sympy.sin(half)
    prefactor = sympy.sqrt(
        sympy.factorial(j_plus_k) * sympy.factorial(j_minus_k)
        * sympy.factorial(j_plus_k0) * sympy.factorial(j_minus_k0)
    ).evalf(digits)

    total = sympy.Float(0, digits)
    for s in range(max(0, -shift), min(j_plus_k0, j_minus_k) + 1):
        denominator = (
            sympy.factorial(j_plus_k0 - s) * sympy.factorial(s)
            * sympy.factorial(shift + s) * sympy.factorial(j_minus_k - s)
        )
        sign = -1 if (shift + s) % 2 else 1
        total += sign * prefactor / denominator * cos_h ** (two_j - shift - 2 * s) * sin_h ** (shift + 2 * s)
    return float(total)


# ==================================================
# 2. SPECTRUM AND EIGENSTATES
# ==================================================

@dataclass(frozen=True)
class EnergyLadder:
    """E(k) = a1 k + a2 k^2 over k = -j..j."""
    a1: float
    a2: float
    two_j: int

    @property
    def k(self) -> np.ndarray:
        return FockBasis(self.two_j).k

    @property
    def energies(self) -> np.ndarray:
        k = self.k
        return self.a1 * k + self.a2 * k * k

    def gaps(self) -> np.ndarray:
        """E(k) - E(k-1) for k = -j+1..j."""
        return self.a1 + self.a2 * (2.0 * self.k[1:] - 1.0)


def energy_ladder(a1: float, a2: float, two_j: int) -> EnergyLadder:
    return EnergyLadder(a1=a1, a2=a2, two_j=two_j)


def rotated_dicke_state(two_j: int, two_k: int, theta: float, phi: float = 0.0) -> StateVector:
    """
    U(theta, phi)|j, k> in the Fock basis; amplitudes d^j_{k',k} e^{i (k' - k) phi}.
    """
    basis = FockBasis(two_j)
    row = wigner_row(two_j, two_k, theta)
    phases = np.exp(0.5j * (basis.two_k - two_k) * phi)
    return StateVector(basis, row.amps * phases)


def eigenstate(x: ExactParams, two_k: int) -> StateVector:
    """
    Eigenvector of the manifold Hamiltonian with energy a1 k + a2 k^2.

    Args:
        x (ExactParams): Manifold point
        two_k (int): Twice the eigen-label k

    Returns:
        StateVector: U(theta, phi)|j, k>

    Raises:
        ProjectionOutOfRange: When |k| > j
    """
    return rotated_dicke_state(x.two_j, two_k, x.theta, x.phi)


def eigen_coefficients(x: ExactParams, s: StateVector) -> np.ndarray:
    """
    C_k = <psi_k|s> for every eigen-label k (ascending).

    Uses U+ = D exp(-G) D+ with D = diag(e^{i k phi}) and G the real rotation generator.
    """
    basis = FockBasis(x.two_j)
    basis.check_same(s.basis)
    if basis.dim == 1 or x.theta == 0.0:
        return s.amps.copy()
    phases = np.exp(0.5j * basis.two_k * x.phi)
    c = 0.5 * x.theta * _ladder_factors(x.two_j)
    inverse = scipy.sparse.diags([-c, c], offsets=[1, -1], shape=(basis.dim, basis.dim), format="csr")
    return phases * expm_multiply(inverse, np.conj(phases) * s.amps)


def state_from_eigen_coefficients(x: ExactParams, coeffs: Sequence[complex]) -> StateVector:
    """Fock-basis state sum_k C_k psi_k; inverse of ``eigen_coefficients``."""
    coeffs = _checked_coefficients(x, coeffs)
    basis = FockBasis(x.two_j)
    if basis.dim == 1 or x.theta == 0.0:
        return StateVector(basis, coeffs.copy())
    phases = np.exp(0.5j * basis.two_k * x.phi)
    c = 0.5 * x.theta * _ladder_factors(x.two_j)
    forward = scipy.sparse.diags([c, -c], offsets=[1, -1], shape=(basis.dim, basis.dim), format="csr")
    return StateVector(basis, phases * expm_multiply(forward, np.conj(phases) * coeffs))


# ==================================================
# 3. GROUND STATE
# ==================================================

def _tie_tolerance(a1: float, a2: float, two_j: int) -> float:
    return 1e-12 * max(abs(a1) * two_j, abs(a2) * two_j * two_j, 1e-300)


def _brute_force_minimum(a1: float, a2: float, two_j: int) -> float:
    return float(np.min(energy_ladder(a1, a2, two_j).energies))


def ground_index(a1: float, a2: float, two_j: int) -> Tuple[int, bool]:
    """
    Twice the k minimizing a1 k + a2 k^2, and whether the minimum is shared.

    On a tie the smaller |k| is returned, the negative one first.

    Args:
        a1 (float): Linear coefficient
        a2 (float): Quadratic coefficient
        two_j (int): Twice the spin

    Returns:
        Tuple[int, bool]: (two_k0, degenerate)

    Raises:
        AllDegenerate: When a1 = a2 = 0
    """
    if a1 == 0.0 and a2 == 0.0:
        raise AllDegenerate()
    if two_j == 0:
        return 0, False

    ladder = energy_ladder(a1, a2, two_j)
    tol = _tie_tolerance(a1, a2, two_j)

    if a2 > 0.0:
        vertex = min(max(-a1 / a2, -float(two_j)), float(two_j))  # twice -a1/(2 a2)
        lower = two_j - 2 * math.ceil((two_j - vertex) / 2.0)
        lower = max(lower, -two_j)
        upper = min(lower + 2, two_j)
        e_lower = a1 * lower / 2.0 + a2 * lower * lower / 4.0
        e_upper = a1 * upper / 2.0 + a2 * upper * upper / 4.0
        if upper != lower and abs(e_upper - e_lower) <= tol:
            candidates = sorted((lower, upper), key=lambda tk: (abs(tk), tk))
            two_k0, degenerate = candidates[0], True
        else:
            two_k0, degenerate = (lower, False) if e_lower < e_upper else (upper, False)
    elif a2 < 0.0:
        if abs(a1) * two_j <= tol:
            two_k0, degenerate = -two_j, True
        else:
            two_k0, degenerate = (two_j if a1 < 0.0 else -two_j), False
    else:
        two_k0, degenerate = (two_j if a1 < 0.0 else -two_j), False

    chosen = a1 * two_k0 / 2.0 + a2 * two_k0 * two_k0 / 4.0
    lowest = _brute_force_minimum(a1, a2, two_j)
    if chosen - lowest > tol:
        # closed-form rule disagrees with enumeration; trust enumeration
        logger.error(f"Ground index rule missed the minimum for a1={a1!r} a2={a2!r} two_j={two_j}")
        two_k0 = int(FockBasis(two_j).two_k[int(np.argmin(ladder.energies))])
    return two_k0, degenerate


def ground_labels(a1: float, a2: float, two_j: int) -> List[int]:
    """
    Every twice-label sharing the lowest energy, preferred one first.
    """
    preferred, degenerate = ground_index(a1, a2, two_j)
    if not degenerate:
        return [preferred]
    energies = energy_ladder(a1, a2, two_j).energies
    tol = _tie_tolerance(a1, a2, two_j)
    labels = FockBasis(two_j).two_k[energies - np.min(energies) <= tol]
    others = sorted((int(tk) for tk in labels if tk != preferred), key=lambda tk: (abs(tk), tk))
    return [preferred] + others


def ground_distribution(x: ExactParams, two_k0: int) -> np.ndarray:
    """
    |<j,k|psi_0>|^2 over k for the eigenstate labelled k0.
    """
    return wigner_row(x.two_j, two_k0, x.theta).probabilities


def level_crossings(two_j: int, ratio_min: float = -math.inf, ratio_max: float = math.inf) -> List[float]:
    """
    Values of a1/a2 at which E(k) = E(k-1), i.e. a1/a2 = -(2k - 1).

    For a2 > 0 these are the points where the ground label jumps by one.
    """
    k = FockBasis(two_j).k[1:]
    ratios = sorted(float(r) for r in -(2.0 * k - 1.0))
    return [r for r in ratios if ratio_min <= r <= ratio_max]


# ==================================================
# 4. ANALYTIC DYNAMICS
# ==================================================

def _checked_coefficients(x: ExactParams, coeffs: Sequence[complex]) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (x.two_j + 1,):
        raise BasisMismatch(x.two_j, coeffs.size - 1)
    norm = float(np.vdot(coeffs, coeffs).real)
    if abs(norm - 1.0) > 1e-8:
        raise BadCoefficients(norm)
    return coeffs


def _ladder_sum(x: ExactParams, coeffs: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Sum_k c_k conj(C_k) C_{k-1} e^{i (E_k - E_{k-1}) t} for every t."""
    weights = _ladder_factors(x.two_j) * np.conj(coeffs[1:]) * coeffs[:-1]
    gaps = energy_ladder(x.a1, x.a2, x.two_j).gaps()
    return np.exp(1j * np.outer(times, gaps)) @ weights


def mean_m_analytic(
    x: ExactParams,
    coeffs: Sequence[complex],
    t: Union[float, Sequence[float]],
    units: Units = Units.PHYSICAL,
) -> Union[float, np.ndarray]:
    """
    Relative population of sum_k C_k psi_k evolved under the manifold Hamiltonian.

    <m>(t) = 2 [cos(theta) sum k |C_k|^2
                - sin(theta) sum c_k Re(conj(C_k) C_{k-1} e^{i (phi + (E_k - E_{k-1}) t)})]

    with c_k = sqrt(j(j+1) - k(k-1)). Paper units drop the leading factor 2.

    Args:
        x (ExactParams): Manifold point
        coeffs (array): Eigenbasis coefficients, ascending k
        t (float | array): Time or times
        units (Units): physical (a+a - b+b) or paper (Jz)

    Returns:
        float | np.ndarray: Matching the shape of t

    Raises:
        BadCoefficients: When the coefficients are not normalized to 1e-8
    """
    coeffs = _checked_coefficients(x, coeffs)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    k = FockBasis(x.two_j).k
    static = math.cos(x.theta) * float(np.sum(k * np.abs(coeffs) ** 2))
    if x.two_j == 0:
        moving = np.zeros_like(times)
    else:
        moving = math.sin(x.theta) * np.real(np.exp(1j * x.phi) * _ladder_sum(x, coeffs, times))
    values = Units(units).factor * (static - moving)
    return float(values[0]) if np.ndim(t) == 0 else values


def oscillation_envelope(
    x: ExactParams,
    coeffs: Sequence[complex],
    t: Union[float, Sequence[float]],
) -> Union[float, np.ndarray]:
    """Modulus of the oscillating part of <m>(t), in physical units."""
    coeffs = _checked_coefficients(x, coeffs)
    times = np.atleast_1d(np.asarray(t, dtype=float))
    if x.two_j == 0:
        values = np.zeros_like(times)
    else:
        values = 2.0 * math.sin(x.theta) * np.abs(_ladder_sum(x, coeffs, times))
    return float(values[0]) if np.ndim(t) == 0 else values


# ==================================================
# 5. COLLAPSE AND REVIVAL
# ==================================================

class RevivalPeriod(BaseModel):
    """
    Recurrence of <m>(t) for a1/a2 = p/q in lowest terms.
    """

    model_config = ConfigDict(frozen=True)

    p: int
    q: int = Field(gt=0)
    p_r: int = Field(gt=0, description="Period counted in collapse-revival units")
    t1: float = Field(gt=0.0, description="Period in time units")
    exact: bool = Field(description="False when p/q was reconstructed from floats")


def collapse_time(a2: float, n: int = 0) -> float:
    """
    t_r(n) = (2n + 1) pi / (2 |a2|).

    Raises:
        NoCollisions: When a2 = 0
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if a2 == 0:
        raise NoCollisions()
    return (2 * n + 1) * math.pi / (2.0 * abs(float(a2)))


def _rational_ratio(a1: numbers.Real, a2: numbers.Real) -> Tuple[Fraction, bool]:
    if isinstance(a1, numbers.Rational) and isinstance(a2, numbers.Rational):
        return Fraction(a1) / Fraction(a2), True
    ratio = float(a1) / float(a2)
    if not math.isfinite(ratio):
        raise NotPeriodic(ratio)
    guess = Fraction(ratio).limit_denominator(MAX_DENOMINATOR)
    if abs(ratio - float(guess)) > RATIONAL_ULPS * np.finfo(float).eps * max(1.0, abs(ratio)):
        raise NotPeriodic(ratio)
    return guess, False


def revival_period(a1: numbers.Real, a2: numbers.Real, two_j: Optional[int] = None) -> RevivalPeriod:
    """
    Period of <m>(t) when a1/a2 is rational.

    With a1/a2 = p/q the gaps a1 + a2(2k - 1) all return in phase after
    p_r = q or 2q collapse-revival units: for integer j, p_r = q iff p - q is
    even; for half-integer j, p_r = q iff p is even. Exact inputs (int,
    Fraction) are used as given; floats go through a bounded continued
    fraction reconstruction.

    Args:
        a1 (Real): Linear coefficient
        a2 (Real): Quadratic coefficient
        two_j (int): Twice the spin; None means integer spin

    Returns:
        RevivalPeriod: p, q, p_r and t1 = p_r pi / |a2|

    Raises:
        NoCollisions: When a2 = 0
        NotPeriodic: When no rational p/q is found
    """
    if a2 == 0:
        raise NoCollisions()
    ratio, exact = _rational_ratio(a1, a2)
    p, q = ratio.numerator, ratio.denominator

    half_integer = two_j is not None and two_j % 2 == 1
    in_phase = (p % 2 == 0) if half_integer else ((p - q) % 2 == 0)
    p_r = q if in_phase else 2 * q

    t1 = p_r * math.pi / abs(float(a2))
    logger.debug(f"a1/a2 = {p}/{q} -> p_r = {p_r}, t1 = {t1:.6g} (exact={exact})")
    return RevivalPeriod(p=p, q=q, p_r=p_r, t1=t1, exact=exact)


def revival_in_units(period: RevivalPeriod, a2: float) -> float:
    """t1 measured in units of 2 t_r(0); equals p_r."""
    return period.t1 / (2.0 * collapse_time(a2, 0))
