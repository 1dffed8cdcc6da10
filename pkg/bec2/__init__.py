"""
Exactly solvable two-mode Bose-Einstein condensate with inelastic collisions.

Library layers, bottom-up: ``model`` (parameter charts), ``fock`` (basis and
Hamiltonian), ``spectral`` (numerical path), ``exact`` (closed-form path),
``observables`` and the ``bec2`` command-line runner in ``cli``.
"""

__version__ = "1.0.0"

from .errors import Bec2Error  # noqa: E402
from .model import CanonicalParams, ExactParams, Units, canonical_to_exact, exact_to_canonical  # noqa: E402

__all__ = [
    "__version__",
    "Bec2Error",
    "CanonicalParams",
    "ExactParams",
    "Units",
    "canonical_to_exact",
    "exact_to_canonical",
]
