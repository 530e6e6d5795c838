# src/core/errors.py

from typing import Any, Dict, Optional


class Clh2dError(Exception):
    """Base class for every error raised by the library."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, "details": self.details}


# Complexes

class ComplexError(Clh2dError):
    pass


class NonSurface(ComplexError):
    pass


class BadPolygon(ComplexError):
    pass


class IntersectionViolation(ComplexError):
    pass


class SizeTooSmall(ComplexError):
    pass


class Unreachable(ComplexError):
    pass


class NotSimple(ComplexError):
    pass


# Instances

class InstanceError(Clh2dError):
    pass


class NotHermitian(InstanceError):
    pass


class NormExceeded(InstanceError):
    pass


class NonCommuting(InstanceError):
    pass


class WrongDimension(InstanceError):
    pass


class NotClosed(InstanceError):
    pass


class TooLarge(InstanceError):
    pass


# Algebras

class AlgebraError(Clh2dError):
    pass


class DimThree(AlgebraError):
    pass


class NotAnticommuting(AlgebraError):
    pass


class CalibrationConflict(AlgebraError):
    pass


# Reduction

class ReductionError(Clh2dError):
    pass


class NotInvariant(ReductionError):
    pass


class TooLargeForProver(ReductionError):
    pass


# Structure

class StructureError(Clh2dError):
    pass


class EquivalenceViolation(StructureError):
    pass


class NoSpecialEdge(StructureError):
    pass


class NotInterior(StructureError):
    pass


# Partition

class PartitionError(Clh2dError):
    pass


class NoCenter(PartitionError):
    pass


class BadParams(PartitionError):
    pass


# States

class StateError(Clh2dError):
    pass


class BadSpectrum(StateError):
    pass


class BackendUnsupported(StateError):
    pass


# Synthesis

class SynthesisError(Clh2dError):
    pass


class OddExcitations(SynthesisError):
    pass


class NotDefectedForm(SynthesisError):
    pass


class MethodUnsupported(SynthesisError):
    pass
