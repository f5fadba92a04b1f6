"""Exception types raised by the numerical routines."""


class RingKPZError(Exception):
    """Base class for all library errors."""


class DomainError(RingKPZError, ValueError):
    """An argument lies outside the domain where a routine is defined."""


class NumericalError(RingKPZError, ArithmeticError):
    """A numerical procedure failed to deliver its advertised accuracy."""


class NonConvergenceError(NumericalError):
    """An iterative or adaptive procedure did not reach its tolerance."""


class PartitionError(NumericalError):
    """Bethe roots could not be separated into left and right sets."""


class KernelOverflowError(NumericalError):
    """A kernel entry exceeds the double precision range."""
