"""
Parameter spaces of the two-mode condensate Hamiltonian.

Two coordinate systems describe the same operator family:

- ``CanonicalParams``: the coefficients of the second-quantized Hamiltonian
  (offset, detuning, Josephson coupling, cross-mode collisions and the two
  inelastic strengths).
- ``ExactParams``: the solvable-manifold chart (A1, A2, theta, phi), i.e. a
  rotated ``A1*Jz + A2*Jz^2``.

``exact_to_canonical`` maps the chart into coefficient space and
``canonical_to_exact`` inverts it, refusing points off the manifold.

Sign and factor conventions:

- The rotation is U = exp[(theta/2)(e^{-i phi} J- - e^{i phi} J+)], which
  gives lam = +A1 sin(theta)/2.
- ``u_cross`` is the coefficient of a+b+ab obtained by conjugation,
  A2 (1 - 3 cos^2 theta)/2. The commonly printed cross-collision constant is
  half of it (see ``paper_u``).
- (A1, theta, phi) and (-A1, pi - theta, phi + pi) give the same operator.
  The inverse map returns the representative with a1 >= 0, theta in [0, pi].
"""

import logging
import math
from enum import Enum
from typing import Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import DegenerateAngle, NotSolvable

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi


class Units(str, Enum):
    """Reporting units for population observables."""
    PHYSICAL = "physical"  # a+a - b+b = 2k
    PAPER = "paper"  # Jz = k

    @property
    def factor(self) -> float:
        return 2.0 if self is Units.PHYSICAL else 1.0


# Preference margin for the Josephson-block angle over the collision-block one.
_ANGLE_PREFERENCE = 0.5


def _wrap_phase(phi: float) -> float:
    wrapped = math.fmod(phi, TWO_PI)
    if wrapped < 0.0:
        wrapped += TWO_PI
    # fmod can return exactly 2*pi after the shift for tiny negative inputs
    return 0.0 if wrapped >= TWO_PI else wrapped


# ==================================================
# 1. PARAMETER MODELS
# ==================================================

class CanonicalParams(BaseModel):
    """
    Coefficients of the two-mode Hamiltonian

        H = a0 + delta_omega (a+a - b+b) + lam (e^{i phi} a+b + h.c.)
            + u_cross a+b+ab + lambda2 (e^{2i phi} a+a+bb + h.c.)
            + mu ((a+a+ab - a+b+bb) e^{i phi} + h.c.)

    on the sector of 2j particles. The phase is stored in [0, 2 pi).
    """

    model_config = ConfigDict(frozen=True)

    a0: float = Field(default=0.0, allow_inf_nan=False, description="Energy offset")
    delta_omega: float = Field(default=0.0, allow_inf_nan=False, description="Mode detuning")
    lam: float = Field(default=0.0, allow_inf_nan=False, description="Josephson coupling")
    phi: float = Field(default=0.0, allow_inf_nan=False, description="Coupling phase (radians)")
    u_cross: float = Field(default=0.0, allow_inf_nan=False, description="Coefficient of a+b+ab")
    mu: float = Field(default=0.0, allow_inf_nan=False, description="One-particle-exchange inelastic strength")
    lambda2: float = Field(default=0.0, allow_inf_nan=False, description="Two-particle-exchange inelastic strength")
    two_j: int = Field(ge=0, description="Twice the pseudo-spin (= particle number)")

    @field_validator("phi")
    @classmethod
    def wrap_phi(cls, v: float) -> float:
        return _wrap_phase(v)

    @property
    def scale(self) -> float:
        """Largest coefficient magnitude; manifold tolerances are relative to it."""
        return max(
            abs(self.a0), abs(self.delta_omega), abs(self.lam),
            abs(self.u_cross), abs(self.mu), abs(self.lambda2),
        )

    def couplings(self) -> np.ndarray:
        """
        Phase-independent coordinates of the operator.

        Returns:
            np.ndarray: (a0, delta_omega, u_cross, lam e^{i phi}, mu e^{i phi}, lambda2 e^{2i phi})
        """
        e1 = complex(math.cos(self.phi), math.sin(self.phi))
        return np.array([
            self.a0,
            self.delta_omega,
            self.u_cross,
            self.lam * e1,
            self.mu * e1,
            self.lambda2 * e1 * e1,
        ], dtype=complex)


class ExactParams(BaseModel):
    """
    Solvable-manifold chart: H = U (a1 Jz + a2 Jz^2) U+ with U = U(theta, phi).
    """

    model_config = ConfigDict(frozen=True)

    a1: float = Field(allow_inf_nan=False, description="Linear coefficient A1")
    a2: float = Field(allow_inf_nan=False, description="Quadratic coefficient A2")
    theta: float = Field(ge=0.0, le=math.pi, description="Rotation angle")
    phi: float = Field(default=0.0, allow_inf_nan=False, description="Rotation phase")
    two_j: int = Field(ge=0, description="Twice the pseudo-spin")

    @field_validator("phi")
    @classmethod
    def wrap_phi(cls, v: float) -> float:
        return _wrap_phase(v)


class ManifoldFit(BaseModel):
    """
    Best manifold point for a set of canonical coefficients.

    ``angle_source`` tells where theta came from: the Josephson block
    (``linear``), the collision block alone (``collision``) or nowhere, when
    every coefficient vanishes and theta = 0 is returned (``free``).
    """

    params: ExactParams
    residual: float
    scale: float
    angle_source: Literal["linear", "collision", "free"]


# ==================================================
# 2. FORWARD MAP
# ==================================================

def exact_to_canonical(x: ExactParams) -> CanonicalParams:
    """
    Coefficients of U(theta, phi) (A1 Jz + A2 Jz^2) U+ on the 2j-particle sector.

    Args:
        x (ExactParams): Manifold point

    Returns:
        CanonicalParams: The same operator in canonical coordinates
    """
    c = math.cos(x.theta)
    s = math.sin(x.theta)
    n = float(x.two_j)
    return CanonicalParams(
        a0=x.a2 * (c * c * n * n + s * s * n) / 4.0,
        delta_omega=x.a1 * c / 2.0,
        lam=x.a1 * s / 2.0,
        phi=x.phi,
        u_cross=x.a2 * (1.0 - 3.0 * c * c) / 2.0,
        mu=x.a2 * c * s / 2.0,
        lambda2=x.a2 * s * s / 4.0,
        two_j=x.two_j,
    )


def paper_u(c: CanonicalParams) -> float:
    """Cross-collision constant in the printed convention (half of u_cross)."""
    return c.u_cross / 2.0


def from_paper_u(u_printed: float) -> float:
    """u_cross corresponding to a cross-collision constant in the printed convention."""
    return 2.0 * u_printed


# ==================================================
# 3. INVERSE MAP AND MANIFOLD TEST
# ==================================================

def _normalized(a1: float, a2: float, theta: float, phi: float, two_j: int) -> ExactParams:
    """Apply the (A1, theta, phi) -> (-A1, pi - theta, phi + pi) gauge so that a1 >= 0."""
    theta = min(max(theta, 0.0), math.pi)
    if a1 < 0.0:
        a1, theta, phi = -a1, math.pi - theta, phi + math.pi
    return ExactParams(a1=a1, a2=a2, theta=theta, phi=phi, two_j=two_j)


def _defect(c: CanonicalParams, x: ExactParams, fit_offset: bool = False) -> float:
    image = exact_to_canonical(x)
    if fit_offset:
        c = c.model_copy(update={"a0": image.a0})
    return float(np.linalg.norm(c.couplings() - image.couplings()))


def _fit_a2(c: CanonicalParams, theta: float, phi: float, fit_offset: bool = False) -> float:
    """Least-squares A2 for a fixed rotation, over the a2-linear couplings."""
    cs, sn = math.cos(theta), math.sin(theta)
    n = float(c.two_j)
    e1 = complex(math.cos(phi), math.sin(phi))
    basis = np.array([
        (cs * cs * n * n + sn * sn * n) / 4.0,
        (1.0 - 3.0 * cs * cs) / 2.0,
        cs * sn / 2.0 * e1,
        sn * sn / 4.0 * e1 * e1,
    ], dtype=complex)
    target = c.couplings()[[0, 2, 4, 5]]
    if fit_offset:
        basis, target = basis[1:], target[1:]
    weight = float(np.vdot(basis, basis).real)
    if weight == 0.0:
        return 0.0
    return float(np.vdot(basis, target).real / weight)


def collision_angle(c: CanonicalParams) -> Optional[float]:
    """
    Rotation angle implied by the collision block (u_cross, mu, lambda2) alone.

    On the manifold A2 = 6 lambda2 - u_cross, A2 cos(2 theta) = -2 lambda2 - u_cross
    and A2 sin(2 theta) = 4 mu. The angle is returned in [0, pi).

    Returns:
        Optional[float]: theta, or None when the block vanishes (A2 = 0)
    """
    a2 = 6.0 * c.lambda2 - c.u_cross
    if a2 == 0.0:
        return None
    two_theta = math.atan2(4.0 * c.mu / a2, (-2.0 * c.lambda2 - c.u_cross) / a2)
    theta = 0.5 * two_theta
    if theta < 0.0:
        theta += math.pi
    return theta


def fit_manifold(c: CanonicalParams, fit_offset: bool = False) -> ManifoldFit:
    """
    Closest manifold point to the given coefficients.

    Two candidate angles are tried, one from the Josephson block
    (delta_omega, lam) and one from the collision block; A2 is fitted by least
    squares for each and the smaller defect wins, with a preference for the
    Josephson-block angle.

    Args:
        c (CanonicalParams): Coefficients to fit
        fit_offset (bool): Treat a0 as unknown; it then takes the manifold
            value of the fitted point and does not enter the defect

    Returns:
        ManifoldFit: Best point, its defect and where the angle came from
    """
    scale = c.scale
    candidates = []

    r = math.hypot(c.delta_omega, c.lam)
    if r > 0.0:
        theta = math.atan2(abs(c.lam), c.delta_omega)
        phi = c.phi if c.lam >= 0.0 else c.phi + math.pi
        a2 = _fit_a2(c, theta, phi, fit_offset)
        x = _normalized(2.0 * r, a2, theta, phi, c.two_j)
        candidates.append((_defect(c, x, fit_offset), "linear", x))

    theta_c = collision_angle(c)
    if theta_c is not None:
        a1 = 2.0 * (c.delta_omega * math.cos(theta_c) + c.lam * math.sin(theta_c))
        a2 = _fit_a2(c, theta_c, c.phi, fit_offset)
        x = _normalized(a1, a2, theta_c, c.phi, c.two_j)
        candidates.append((_defect(c, x, fit_offset), "collision", x))

    if not candidates:
        x = ExactParams(a1=0.0, a2=0.0, theta=0.0, phi=c.phi, two_j=c.two_j)
        return ManifoldFit(params=x, residual=_defect(c, x, fit_offset), scale=scale, angle_source="free")

    best = candidates[0]
    for candidate in candidates[1:]:
        if candidate[0] < _ANGLE_PREFERENCE * best[0]:
            best = candidate
    residual, source, x = best
    return ManifoldFit(params=x, residual=residual, scale=scale, angle_source=source)


def manifold_offset(c: CanonicalParams) -> float:
    """a0 of the manifold point closest to c when the offset is left free."""
    return exact_to_canonical(fit_manifold(c, fit_offset=True).params).a0


def solvability_residual(c: CanonicalParams) -> float:
    """
    Distance from the coefficients to the solvable manifold.

    Zero exactly for images of ``exact_to_canonical`` (up to rounding),
    positive otherwise.

    Args:
        c (CanonicalParams): Coefficients to test

    Returns:
        float: Euclidean norm of the coupling defect against the best fit
    """
    return fit_manifold(c).residual


def invert_to_manifold(c: CanonicalParams, tol: float = 1e-9, strict_angle: bool = False) -> ManifoldFit:
    """
    Invert ``exact_to_canonical`` and report where theta came from.

    ``angle_source`` is ``linear`` in the regular case, ``collision`` when
    delta_omega = lam = 0 and theta follows from (u_cross, mu, lambda2), and
    ``free`` when every coefficient vanishes and theta = 0 is returned.

    Args:
        c (CanonicalParams): Coefficients on (or near) the manifold
        tol (float): Accepted defect relative to the largest coefficient
        strict_angle (bool): Raise when theta cannot come from (delta_omega, lam)

    Returns:
        ManifoldFit: Representative with a1 >= 0 and theta in [0, pi], plus its angle source

    Raises:
        NotSolvable: When the defect exceeds tol * scale
        DegenerateAngle: With strict_angle, when delta_omega = lam = 0
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    fit = fit_manifold(c)
    if fit.residual > tol * fit.scale:
        raise NotSolvable(fit.residual, tol * fit.scale)
    if fit.angle_source != "linear":
        logger.warning(
            f"Rotation angle taken from the {fit.angle_source} block "
            f"(delta_omega = lam = 0); theta={fit.params.theta:.6g}"
        )
        if strict_angle:
            raise DegenerateAngle(
                message=f"theta is not determined by the Josephson block (source: {fit.angle_source})"
            )
    return fit


def canonical_to_exact(c: CanonicalParams, tol: float = 1e-9, strict_angle: bool = False) -> ExactParams:
    """
    Invert ``exact_to_canonical``.

    Args:
        c (CanonicalParams): Coefficients on (or near) the manifold
        tol (float): Accepted defect relative to the largest coefficient
        strict_angle (bool): Raise when theta cannot come from (delta_omega, lam)

    Returns:
        ExactParams: Representative with a1 >= 0 and theta in [0, pi]

    Raises:
        NotSolvable: When the defect exceeds tol * scale
        DegenerateAngle: With strict_angle, when delta_omega = lam = 0
    """
    return invert_to_manifold(c, tol, strict_angle).params


def is_solvable(c: CanonicalParams, tol: float = 1e-9) -> Tuple[bool, float]:
    """
    Manifold membership test used for exact/numeric routing.

    Returns:
        Tuple[bool, float]: (on manifold, residual)
    """
    fit = fit_manifold(c)
    return fit.residual <= tol * fit.scale, fit.residual


# ==================================================
# 4. INTERPOLATION TOWARD THE SOLVABLE MODEL
# ==================================================

def manifold_from_josephson(
    delta_omega: float,
    lam: float,
    u_cross: float,
    two_j: int,
    phi: float = 0.0,
) -> ExactParams:
    """
    Manifold point sharing the detuning, Josephson coupling and cross collisions.

    theta and A1 follow from (delta_omega, lam); A2 is chosen so that the
    manifold u_cross equals the given one.

    Raises:
        DegenerateAngle: When 1 - 3 cos^2 theta = 0 (u_cross does not fix A2)
    """
    theta = math.atan2(abs(lam), delta_omega)
    if lam < 0.0:
        phi = phi + math.pi
    a1 = 2.0 * math.hypot(delta_omega, lam)
    lever = (1.0 - 3.0 * math.cos(theta) ** 2) / 2.0
    if abs(lever) < 1e-12:
        raise DegenerateAngle(message="cos^2(theta) = 1/3: cross collisions do not determine A2")
    return ExactParams(a1=a1, a2=u_cross / lever, theta=theta, phi=phi, two_j=two_j)


def interpolate_inelastic(
    base: CanonicalParams,
    target_mu: float,
    target_lambda2: float,
    s: float,
) -> CanonicalParams:
    """
    Move the inelastic strengths linearly from the base values (s=0) to the targets (s=1).

    Args:
        base (CanonicalParams): Starting coefficients (usually mu = lambda2 = 0)
        target_mu (float): mu at s = 1
        target_lambda2 (float): lambda2 at s = 1
        s (float): Interpolation fraction in [0, 1]

    Returns:
        CanonicalParams: Interpolated coefficients
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError("interpolation fraction must lie in [0, 1]")
    return base.model_copy(update={
        "mu": (1.0 - s) * base.mu + s * target_mu,
        "lambda2": (1.0 - s) * base.lambda2 + s * target_lambda2,
    })
