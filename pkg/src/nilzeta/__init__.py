"""Twist representation zeta functions of nilpotent Lie lattices."""

from .errors import NilzetaError
from .lattice import LieLattice, adapt_basis, load_lattice, rescale, validate
from .localring import LocalRingSpec, make_quotient
from .poincare import LocalZetaSeries, local_zeta, stabilization_check

__version__ = "0.1.0"

__all__ = [
    "LieLattice",
    "LocalRingSpec",
    "LocalZetaSeries",
    "NilzetaError",
    "adapt_basis",
    "load_lattice",
    "local_zeta",
    "make_quotient",
    "rescale",
    "stabilization_check",
    "validate",
]
