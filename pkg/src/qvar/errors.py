"""Exception hierarchy mapped to CLI exit codes.

Exit code contract: 0 success, 1 input error, 2 numeric/degeneracy error,
3 precondition or parameter violation.
"""


class QvarError(Exception):
    """Base class for all qvar errors."""

    exit_code = 2


class InputError(QvarError):
    """Malformed or inconsistent input data (bad files, non-finite entries,
    mismatched shapes or spaces)."""

    exit_code = 1


class PreconditionError(QvarError):
    """A documented precondition of the operation does not hold."""

    exit_code = 3


class ParameterError(PreconditionError):
    """A scalar parameter is outside its documented range."""

    exit_code = 3


class NumericError(QvarError):
    """Numerical failure: singular solve, overflow, non-convergence."""

    exit_code = 2


class DegeneracyError(NumericError):
    """Eigenproblem or oblique projection too ill-conditioned to trust."""

    exit_code = 2


class DivergenceError(NumericError):
    """Matrix powers or semigroup blow up (spectral radius above one)."""

    exit_code = 2
