"""Exception types raised across the package."""

import numpy as np


class InvalidArgumentError(ValueError):
    """Bad shape, out-of-range parameter or otherwise unusable input."""


class DecompositionError(np.linalg.LinAlgError):
    """A factorization broke down (e.g. non-positive Cholesky pivot)."""


class SingularTriangularError(DecompositionError):
    """Triangular solve against a factor with a zero diagonal entry."""


class InternalConsistencyError(RuntimeError):
    """An invariant that holds by construction was found violated."""


class UndefinedMetricError(ArithmeticError):
    """A metric or estimator is undefined for the given input."""


class FormatError(ValueError):
    """Malformed matrix or stack file.

    ``offset`` is the byte offset (binary files) or line number (text files)
    where parsing failed.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(ValueError):
    """Bench configuration could not be parsed."""

    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.field = field
