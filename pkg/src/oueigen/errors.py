"""Exception hierarchy.

Every error carries a stable ``exit_code`` used by the command line front end.
"""


class OUError(Exception):
    """Base class for all errors raised by :mod:`oueigen`."""

    exit_code = 1


class InputError(OUError, ValueError):
    """Malformed input document (bad JSON, missing keys, wrong types)."""

    exit_code = 3


class ShapeMismatch(OUError, ValueError):
    exit_code = 10


class UnstableDrift(OUError):
    """Some eigenvalue of the drift matrix has nonnegative real part."""

    exit_code = 11


class NotDiagonalizable(OUError):
    exit_code = 12


class HypoellipticityViolated(OUError):
    """A left eigenvector of ``A`` lies (numerically) in the kernel of ``B^T``."""

    exit_code = 13


class SolverFailure(OUError):
    exit_code = 14


class DimensionMismatch(OUError, ValueError):
    exit_code = 20


class AxisOutOfRange(OUError, IndexError):
    exit_code = 21


class ZeroPolynomial(OUError, ValueError):
    exit_code = 22


class WrongCase(OUError):
    """A closed form was requested for a system outside its case."""

    exit_code = 30


class BasisNotClosed(OUError):
    exit_code = 31


class IndexNotInBasis(OUError, KeyError):
    exit_code = 32


class NumericalBreakdown(OUError):
    exit_code = 33


class SingularCovariance(OUError):
    exit_code = 40


class IncompleteEigensystem(OUError):
    exit_code = 41


class VerificationFailed(OUError):
    """A residual or statistical check exceeded its threshold."""

    exit_code = 50


EXIT_CODES = {
    cls.__name__: cls.exit_code
    for cls in (
        OUError,
        InputError,
        ShapeMismatch,
        UnstableDrift,
        NotDiagonalizable,
        HypoellipticityViolated,
        SolverFailure,
        DimensionMismatch,
        AxisOutOfRange,
        ZeroPolynomial,
        WrongCase,
        BasisNotClosed,
        IndexNotInBasis,
        NumericalBreakdown,
        SingularCovariance,
        IncompleteEigensystem,
        VerificationFailed,
    )
}
