"""Exception types shared across the toolkit.

All errors raised by the numerical kernels and the experiment harness derive
from :class:`AccelKitError`, so callers can catch one base type at the CLI
boundary and map it to an exit code.
"""

from __future__ import annotations


class AccelKitError(Exception):
    """Base class for all toolkit errors."""


class NonFiniteInput(AccelKitError):
    """An input vector or matrix contains NaN or infinite entries."""


class DimensionMismatch(AccelKitError):
    """Operands have incompatible shapes or lengths."""


class SingularWindow(AccelKitError):
    """A history window whose difference columns are numerically rank deficient."""


class ZeroVector(AccelKitError):
    """An operation that needs a nonzero vector received a (numerically) zero one."""


class DegenerateTrace(AccelKitError):
    """A residual-norm trace is too short to estimate convergence factors."""


class InvalidSpec(AccelKitError):
    """An unknown problem identifier or invalid problem parameters."""


class ParseError(AccelKitError):
    """A malformed input file (header or entries could not be parsed)."""


class UnsupportedFormat(AccelKitError):
    """A syntactically valid input file in a variant this toolkit does not support."""


class NotSymmetric(AccelKitError):
    """An operator failed the symmetry probe required by a symmetric solver."""


class ConfigError(AccelKitError):
    """An experiment configuration violates the documented schema."""
