"""Exception hierarchy shared by all modules.

Every error carries a machine-readable payload so the CLI can emit it as JSON.
"""

from __future__ import annotations

from typing import Any


class NilzetaError(Exception):
    """Base class. ``details`` is serialised verbatim by the CLI."""

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, **self.details}


# lattice
class LatticeError(NilzetaError):
    pass


class JacobiViolation(LatticeError):
    pass


class ClassHypothesisViolation(LatticeError):
    pass


class NotNilpotent(LatticeError):
    pass


# localring
class InvalidDefiningPolynomial(NilzetaError):
    pass


class PairingViolation(NilzetaError):
    pass


# poincare
class KirillovInapplicable(NilzetaError):
    pass


class ExcludedPrime(NilzetaError):
    pass


class NonIntegralCoefficient(NilzetaError):
    pass


class TruncationUnstable(NilzetaError):
    pass


# zetafit
class NoFitFound(NilzetaError):
    pass


class NoUniformFit(NilzetaError):
    pass


class AmbiguousFitWarning(UserWarning):
    """Two minimal candidates agree on the data but differ beyond it."""


# arith
class MissingLocalFactor(NilzetaError):
    pass


class EmptyRayData(NilzetaError):
    pass


class InsufficientData(NilzetaError):
    pass


# oracle
class BCHNotIntegral(NilzetaError):
    pass


class GroupTooLarge(NilzetaError):
    pass


class NoSuitableModulus(NilzetaError):
    pass


class CapExceeded(NilzetaError):
    pass


class MismatchFound(NilzetaError):
    pass


class GroupAxiomViolation(NilzetaError):
    pass
