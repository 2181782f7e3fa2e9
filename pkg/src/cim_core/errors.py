"""
Exception hierarchy for the CIM-BS solver.

Most errors also derive from ValueError so callers that only know about the
standard library keep working.
"""

from typing import Optional


class CimError(Exception):
    """Base class for solver errors."""


class ConfigError(CimError, ValueError):
    """Invalid, unknown or contradictory configuration."""


class EdgeListParseError(CimError, ValueError):
    """Malformed edge-list input."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class NodeRangeError(CimError, ValueError):
    """A node index lies outside [0, n)."""


class DomainError(CimError, ValueError):
    """An argument lies outside an activation function's domain."""


class EnumerationLimitError(CimError):
    """An exact oracle was asked to enumerate beyond its size bound."""


class UnsupportedModelError(CimError):
    """The operation needs an independent-activation strategy model."""


class ResourceCapError(CimError):
    """A configured resource cap would be exceeded."""

    def __init__(self, message: str, required: int, cap: Optional[int] = None):
        super().__init__(message)
        self.required = required
        self.cap = cap
