"""Exception types shared across the package."""

from __future__ import annotations


class AdshorError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class InvalidCodeError(AdshorError, ValueError):
    pass


class DomainError(AdshorError, ValueError):
    pass


class CapacityError(AdshorError, RuntimeError):
    pass


class SchedulingError(AdshorError, ValueError):
    pass


class UnsupportedOperationError(AdshorError, ValueError):
    pass


class CircuitStateError(AdshorError, RuntimeError):
    pass


class CircuitParseError(AdshorError, ValueError):
    pass


class SchemaError(AdshorError, KeyError):
    pass


class ArityError(AdshorError, ValueError):
    pass


class DecodingFailure(AdshorError, RuntimeError):
    """More faults than the decoder can handle were detected."""
