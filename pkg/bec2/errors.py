"""
Error hierarchy for the two-mode condensate simulator.

Every failure the library can signal derives from ``Bec2Error``. Each
subclass carries a machine-readable ``error_code`` and the process exit code
the command line maps it to, so the CLI needs a single handler for the whole
family.
"""

from typing import Any, List, Optional

from pydantic import BaseModel


# ==================================================
# 1. ERROR REPORT MODELS
# ==================================================

class ErrorDetail(BaseModel):
    """
    One measured quantity attached to an error (residual, tolerance, index...).
    """
    field: Optional[str] = None
    message: str
    value: Optional[Any] = None


class ErrorReport(BaseModel):
    """
    JSON shape written to stderr when a command fails.
    """
    error: bool = True
    message: str
    error_code: str
    exit_code: int
    details: List[ErrorDetail] = []


# ==================================================
# 2. BASE EXCEPTION
# ==================================================

class Bec2Error(Exception):
    """
    Base class for all library errors.

    Args:
        message (str): Human-readable description
        error_code (str): Machine-readable code
        exit_code (int): CLI exit status for this failure
        details (list): Optional structured details
    """

    error_code = "BEC2_ERROR"
    exit_code = 4

    def __init__(
        self,
        message: str,
        error_code: Optional[str] = None,
        exit_code: Optional[int] = None,
        details: Optional[List[ErrorDetail]] = None,
    ):
        self.message = message
        if error_code is not None:
            self.error_code = error_code
        if exit_code is not None:
            self.exit_code = exit_code
        self.details = details or []
        super().__init__(self.message)

    def to_report(self) -> ErrorReport:
        return ErrorReport(
            message=self.message,
            error_code=self.error_code,
            exit_code=self.exit_code,
            details=self.details,
        )


# ==================================================
# 3. PARAMETER-SPACE ERRORS
# ==================================================

class NotSolvable(Bec2Error):
    """Canonical parameters lie off the solvable manifold."""
    error_code = "NOT_SOLVABLE"
    exit_code = 3

    def __init__(self, residual: float, tolerance: float):
        self.residual = residual
        self.tolerance = tolerance
        super().__init__(
            message=f"Parameters are off the solvable manifold (residual {residual:.3e} > {tolerance:.3e})",
            details=[
                ErrorDetail(field="residual", message="manifold defect", value=residual),
                ErrorDetail(field="tolerance", message="accepted defect", value=tolerance),
            ],
        )


class DegenerateAngle(Bec2Error):
    """The rotation angle cannot be recovered from the given coefficients."""
    error_code = "DEGENERATE_ANGLE"
    exit_code = 3


class OffManifold(Bec2Error):
    """Exact mode was requested for parameters that are not solvable."""
    error_code = "OFF_MANIFOLD"
    exit_code = 3


# ==================================================
# 4. OPERATOR AND STATE ERRORS
# ==================================================

class SectorViolation(Bec2Error):
    """An operator word changes the total particle number."""
    error_code = "SECTOR_VIOLATION"

    def __init__(self, word: str, net_count: int):
        super().__init__(
            message=f"Operator word '{word}' changes particle number by {net_count:+d}",
            details=[ErrorDetail(field="net_count", message="creations minus annihilations", value=net_count)],
        )


class BasisMismatch(Bec2Error):
    """Two objects live on different fixed-number sectors."""
    error_code = "BASIS_MISMATCH"

    def __init__(self, expected_two_j: int, got_two_j: int):
        super().__init__(
            message=f"Basis mismatch: expected two_j={expected_two_j}, got two_j={got_two_j}"
        )


class ProjectionOutOfRange(Bec2Error):
    """A projection k lies outside {-j..j} or has the wrong parity."""
    error_code = "PROJECTION_OUT_OF_RANGE"
    exit_code = 2

    def __init__(self, two_j: int, two_k: int):
        super().__init__(
            message=f"Projection 2k={two_k} is not allowed for 2j={two_j}"
        )


class BadCoefficients(Bec2Error):
    """Eigenbasis coefficients are not normalized."""
    error_code = "BAD_COEFFICIENTS"

    def __init__(self, norm: float):
        super().__init__(
            message=f"Coefficient row has norm {norm:.12g}, expected 1",
            details=[ErrorDetail(field="norm", message="sum of |C_k|^2", value=norm)],
        )


# ==================================================
# 5. NUMERICAL ERRORS
# ==================================================

class ConvergenceFailure(Bec2Error):
    """The eigensolver did not converge."""
    error_code = "CONVERGENCE_FAILURE"
    exit_code = 4


class SizeExceeded(Bec2Error):
    """A dense oracle was asked for a sector larger than its cap."""
    error_code = "SIZE_EXCEEDED"
    exit_code = 4

    def __init__(self, two_j: int, limit: int):
        super().__init__(
            message=f"Dense oracle refuses two_j={two_j} (limit {limit})"
        )


# ==================================================
# 6. SPECTRUM ERRORS
# ==================================================

class AllDegenerate(Bec2Error):
    """Every projection is a ground state (a1 = a2 = 0)."""
    error_code = "ALL_DEGENERATE"
    exit_code = 2

    def __init__(self):
        super().__init__(message="a1 = a2 = 0: every projection is a ground state")


class NoCollisions(Bec2Error):
    """a2 = 0, so there is no collapse and no revival structure."""
    error_code = "NO_COLLISIONS"
    exit_code = 2

    def __init__(self):
        super().__init__(message="a2 = 0: the spectrum is linear, phases never dephase")


class NotPeriodic(Bec2Error):
    """a1/a2 has no rational reconstruction, so the dynamics is not periodic."""
    error_code = "NOT_PERIODIC"
    exit_code = 5

    def __init__(self, ratio: float):
        self.ratio = ratio
        super().__init__(
            message=f"a1/a2 = {ratio!r} is not rational within tolerance; no revival period",
            details=[ErrorDetail(field="ratio", message="a1/a2", value=ratio)],
        )


# ==================================================
# 7. CONFIGURATION ERRORS
# ==================================================

class InvalidConfig(Bec2Error):
    """A run configuration failed validation."""
    error_code = "INVALID_CONFIG"
    exit_code = 2
