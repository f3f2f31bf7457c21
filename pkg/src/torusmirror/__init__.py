"""Numerical mirror symmetry on a torus fibered over a circle.

Three independent computations of the same cohomology are implemented and
cross-checked: theta-type holomorphic sections on the mirror side, an
intersection complex with area-weighted differential, and the de Rham
cohomology of twisted rapidly-decreasing sections (analytic classification
plus a finite-difference discretization).
"""

from .errors import (
    DecayError,
    NumericsError,
    TorusMirrorError,
    TransversalityError,
    UnsupportedError,
    ValidationError,
    WindowError,
)

__all__ = [
    "DecayError",
    "NumericsError",
    "TorusMirrorError",
    "TransversalityError",
    "UnsupportedError",
    "ValidationError",
    "WindowError",
]

__version__ = "0.1.0"
