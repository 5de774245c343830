"""Exception types raised across the package."""


class OpMeansError(Exception):
    """Base class for every error raised by opmeans."""


class PoleParameter(OpMeansError, ValueError):
    """A lower hypergeometric parameter hits a pole (zero or negative integer)."""


class ZeroLeadingCoefficient(OpMeansError, ZeroDivisionError):
    pass


class LeadingCoefficientNotOne(OpMeansError, ValueError):
    pass


class OutOfDomain(OpMeansError, ValueError):
    pass


class MultiplierSingular(OpMeansError, ArithmeticError):
    """A spectral symbol is unusable at an eigenvalue the field populates.

    ``rk`` carries the offending value of radius times wavenumber when known.
    """

    def __init__(self, message, rk=None, k=None):
        super().__init__(message)
        self.rk = rk
        self.k = k


class NonGridSpectral(OpMeansError, TypeError):
    pass


class BandLimitExceeded(OpMeansError, ValueError):
    def __init__(self, message, rk=None):
        super().__init__(message)
        self.rk = rk


class TailNotConverged(OpMeansError, RuntimeError):
    pass


class SupportClipped(OpMeansError, ValueError):
    pass


class SeriesConvergenceWarning(RuntimeWarning):
    """Truncated operator series applied where its terms are not yet small."""
