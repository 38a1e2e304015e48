"""Exception classes raised by canonme."""


class CanonError(Exception):
    """Base class for all canonme errors."""


class ValidationError(CanonError, ValueError):
    """Input data violates a structural requirement."""


class InvalidDimensionError(ValidationError):
    pass


class NotHermitianError(ValidationError):
    pass


class NotHermiticityPreservingError(ValidationError):
    """The coefficient matrix of a generator is not Hermitian."""


class NotTraceAnnihilatingError(ValidationError):
    """The generator does not satisfy Tr[L(rho)] = 0."""


class NumericalError(CanonError, ArithmeticError):
    """A numerical procedure failed (divergence, non-finite values)."""


class SingularMapError(NumericalError):
    """A dynamical map is not invertible within the configured condition bound."""

    def __init__(self, report, message=None):
        self.report = report
        if message is None:
            message = (f"map at t={report.time:.17g} is singular "
                       f"(condition number {report.condition_number:.3e})")
        super().__init__(message)
