"""Exception types shared across the package."""


class CpApproxError(Exception):
    """Base class for all package errors."""


class DomainError(CpApproxError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ResourceError(CpApproxError, MemoryError):
    """A computation would exceed its configured memory budget."""


class NumericalDegeneracyError(CpApproxError, ArithmeticError):
    """A quantity became too small to divide by safely."""


class ValidationError(CpApproxError, ValueError):
    """A run configuration or model description is malformed."""
