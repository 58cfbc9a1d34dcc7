"""Exception types shared across the package.

The CLI maps each class onto a stable exit status.
"""


class FPPError(Exception):
    exit_code = 2


class ParameterError(FPPError, ValueError):
    """Invalid parameter value for an operation."""

    exit_code = 1


class StructuralError(FPPError, ValueError):
    """Graph does not satisfy a structural precondition (connected, tree, unicyclic, ...)."""

    exit_code = 2


class DataError(FPPError, ValueError):
    """Malformed input data (files, non-finite statistics, nonpositive samples)."""

    exit_code = 2


class ResourceError(FPPError, RuntimeError):
    """A configured budget (retries, enumeration size, subset count) was exceeded."""

    exit_code = 3
