"""
Run configuration and manifest models for the command-line runner.

A ``RunConfig`` is built from command-line flags, a JSON file, or both
(flags win). JSON keys mirror the field names one-to-one; unknown keys are
rejected.
"""

import hashlib
import json
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .model import CanonicalParams, ExactParams, Units, from_paper_u


# ==================================================
# 1. ENUMS
# ==================================================

class Experiment(str, Enum):
    GROUND = "ground"
    DYNAMICS = "dynamics"
    ENTANGLEMENT = "entanglement"
    VERIFY = "verify"


class Mode(str, Enum):
    """Which solution path a run takes."""
    EXACT = "exact"
    NUMERIC = "numeric"
    AUTO = "auto"


class InitialKind(str, Enum):
    DICKE = "dicke"
    ROTATED = "rotated"
    FILE = "file"


class InitialBasis(str, Enum):
    """Basis the initial amplitudes are given in."""
    FOCK = "fock"
    EIGEN = "eigen"


class UConvention(str, Enum):
    """How a user-supplied cross-collision constant is read."""
    DERIVED = "derived"
    PAPER = "paper"


def _two_times(value: float, name: str) -> int:
    doubled = 2.0 * value
    if abs(doubled - round(doubled)) > 1e-9:
        raise ValueError(f"{name} must be an integer or half-integer, got {value!r}")
    return int(round(doubled))


# ==================================================
# 2. RUN CONFIGURATION
# ==================================================

class InitialStateSpec(BaseModel):
    """
    Initial state for dynamics runs.

    The default is the rotated top state with theta = pi/2. Unless ``basis``
    says otherwise its amplitudes are eigenbasis coefficients whenever the
    parameters lie on the solvable manifold (on either route) and Fock
    amplitudes otherwise.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: InitialKind = InitialKind.ROTATED
    k: Optional[float] = Field(default=None, description="Projection; defaults to j")
    theta: float = Field(default=math.pi / 2, ge=0.0, le=math.pi)
    phi: float = 0.0
    file: Optional[Path] = None
    basis: Optional[InitialBasis] = Field(
        default=None, description="Eigenbasis on the manifold, Fock basis off it, when unset"
    )

    @model_validator(mode="after")
    def check_file(self) -> "InitialStateSpec":
        if self.kind is InitialKind.FILE and self.file is None:
            raise ValueError("initial kind 'file' requires 'file'")
        return self


class RunConfig(BaseModel):
    """
    One experiment run.

    Parameters come either in the exact chart (a1, a2, theta, phi) or as
    canonical coefficients (delta_omega, lam, u, mu, Lambda, a0); mixing the
    two is an error. ``u`` is read per ``u_convention``.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True, frozen=True)

    experiment: Experiment
    mode: Mode = Mode.AUTO
    units: Units = Units.PHYSICAL
    output: Path = Path("out")
    emit_svg: bool = False

    j: Optional[float] = Field(default=None, ge=0.0, description="Pseudo-spin (half the particle number)")
    k0: Optional[float] = Field(default=None, description="Eigen-label of the reported state")

    # exact chart
    a1: Optional[float] = None
    a2: Optional[float] = None
    theta: Optional[float] = Field(default=None, ge=0.0, le=math.pi)
    phi: float = 0.0

    # canonical coefficients
    a0: Optional[float] = None
    delta_omega: Optional[float] = None
    lam: Optional[float] = Field(default=None, alias="lambda")
    u: Optional[float] = None
    u_convention: UConvention = UConvention.DERIVED
    mu: Optional[float] = None
    lambda2: Optional[float] = Field(default=None, alias="Lambda")

    inelastic_fraction: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    toward_manifold: bool = False

    t_max: float = Field(default=10.0, gt=0.0)
    steps: int = Field(default=400, ge=2)
    initial: InitialStateSpec = Field(default_factory=InitialStateSpec)
    request_period: bool = False

    theta_grid: Optional[Tuple[float, float, int]] = None
    k0_list: Optional[List[float]] = None
    j_list: Optional[List[float]] = None

    tolerance: float = Field(default=1e-9, gt=0.0)
    perturb_mu: float = 0.0
    seed: int = 20240611

    @field_validator("theta_grid")
    @classmethod
    def validate_theta_grid(cls, v: Optional[Tuple[float, float, int]]) -> Optional[Tuple[float, float, int]]:
        if v is None:
            return v
        start, stop, n = v
        if n < 1:
            raise ValueError("theta_grid needs at least one point")
        if not (0.0 <= start <= math.pi and 0.0 <= stop <= math.pi):
            raise ValueError("theta_grid must lie in [0, pi]")
        return v

    @field_validator("k0_list", "j_list")
    @classmethod
    def validate_nonempty(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and not v:
            raise ValueError("list must not be empty")
        return v

    @model_validator(mode="after")
    def check_parameters(self) -> "RunConfig":
        if self.uses_canonical and any(v is not None for v in (self.a1, self.a2)):
            raise ValueError("give either exact (a1, a2) or canonical coefficients, not both")
        if self.experiment in (Experiment.GROUND, Experiment.DYNAMICS) and self.j is None:
            raise ValueError(f"'{self.experiment.value}' requires j")
        if self.j is not None:
            _two_times(self.j, "j")
        if self.k0 is not None:
            _two_times(self.k0, "k0")
        if self.mode is Mode.EXACT and self.inelastic_fraction is not None:
            raise ValueError("inelastic interpolation leaves the manifold; use numeric or auto mode")
        return self

    # ----- derived views -----

    @property
    def uses_canonical(self) -> bool:
        return any(v is not None for v in (self.a0, self.delta_omega, self.lam, self.u, self.mu, self.lambda2))

    @property
    def two_j(self) -> int:
        return _two_times(self.j, "j")

    @property
    def two_k0(self) -> Optional[int]:
        return None if self.k0 is None else _two_times(self.k0, "k0")

    def theta_values(self) -> List[float]:
        """Sweep angles: theta_grid, else the single theta, else 181 points over [0, pi]."""
        if self.theta_grid is not None:
            start, stop, n = self.theta_grid
        elif self.theta is not None:
            return [self.theta]
        else:
            start, stop, n = 0.0, math.pi, 181
        return np.linspace(start, stop, n).tolist()

    def u_cross(self) -> float:
        if self.u is None:
            return 0.0
        return from_paper_u(self.u) if self.u_convention is UConvention.PAPER else self.u

    def exact_params(self, two_j: Optional[int] = None) -> ExactParams:
        """Exact-chart parameters; A2 defaults to 1 and A1, theta to 0."""
        return ExactParams(
            a1=0.0 if self.a1 is None else self.a1,
            a2=1.0 if self.a2 is None else self.a2,
            theta=0.0 if self.theta is None else self.theta,
            phi=self.phi,
            two_j=self.two_j if two_j is None else two_j,
        )

    def canonical_params(self, two_j: Optional[int] = None) -> CanonicalParams:
        """Canonical coefficients as given (no interpolation applied)."""
        return CanonicalParams(
            a0=self.a0 or 0.0,
            delta_omega=self.delta_omega or 0.0,
            lam=self.lam or 0.0,
            phi=self.phi,
            u_cross=self.u_cross(),
            mu=self.mu or 0.0,
            lambda2=self.lambda2 or 0.0,
            two_j=self.two_j if two_j is None else two_j,
        )


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON config; the caller validates it."""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    if not isinstance(data, dict):
        raise ValueError("config file must hold a JSON object")
    return data


# ==================================================
# 3. RUN MANIFEST
# ==================================================

CONVENTION_NOTE = (
    "Dicke labels |j,k>: n_a = j + k, m = a+a - b+b = 2k, particle number 2j. "
    "U(theta,phi) = exp[(theta/2)(e^{-i phi} J- - e^{i phi} J+)], J+ = a+b. "
    "u_cross multiplies a+b+ab and equals A2(1 - 3cos^2 theta)/2; the printed "
    "cross-collision constant is u_cross/2."
)


class OutputFile(BaseModel):
    name: str
    sha256: str
    bytes: int


class RunManifest(BaseModel):
    """
    Record of a finished run, written as manifest.json next to its outputs.
    """

    experiment: Experiment
    route: Mode
    residual: Optional[float] = None
    exact_params: Optional[Dict[str, Any]] = None
    canonical_params: Optional[Dict[str, Any]] = None
    convention: str = CONVENTION_NOTE
    version: str
    wall_clock_seconds: float
    files: List[OutputFile] = Field(default_factory=list)
    extras: Dict[str, Any] = Field(default_factory=dict)

    def add_file(self, path: Path) -> None:
        data = path.read_bytes()
        self.files.append(OutputFile(name=path.name, sha256=hashlib.sha256(data).hexdigest(), bytes=len(data)))
