"""Exception types shared across the package."""


class NhSpectraError(Exception):
    """Base class for all package errors."""


class ZeroPolynomial(NhSpectraError):
    """All coefficients fall below the zero tolerance."""


class NonConvergence(NhSpectraError):
    """Root refinement exhausted its iteration budget.

    Carries the best iterate and its residual for diagnostics.
    """

    def __init__(self, message, roots=None, residual=None):
        super().__init__(message)
        self.roots = roots
        self.residual = residual


class DegreeZero(NhSpectraError):
    """Resultant/Sylvester input is constant in the eliminated variable."""


class AllZeroHops(NhSpectraError):
    """Model construction received no nonzero hopping amplitude."""


class DegenerateModel(NhSpectraError):
    """det(h(beta) - E) does not depend on beta."""


class ZeroBeta(NhSpectraError):
    """Bloch evaluation requested at beta = 0."""


class TooSmallL(NhSpectraError):
    """Chain length below the minimal size M + N + 1."""


class SizeCapExceeded(NhSpectraError):
    """Finite non-Hermitian eigensolve beyond the trusted size cap."""


class QVanishesOnCircle(NhSpectraError):
    """The factor q(beta) has a (near-)zero on the unit circle."""


class UnmatchedGbzPoint(NhSpectraError):
    """A supplied beta is not a characteristic root at any band energy."""


class EliminationDegenerate(NhSpectraError):
    """Resultant identically zero after trivial-factor removal."""

    def __init__(self, message, theta=None):
        super().__init__(message)
        self.theta = theta


class DegreeBudgetExceeded(NhSpectraError):
    """Symbolic elimination would exceed the configured degree budget."""


class IdenticallyZero(NhSpectraError):
    """Implicit-curve pipeline collapsed to the zero polynomial."""


class OnSpectrum(NhSpectraError):
    """Reference energy lies within guard distance of the spectrum."""


class PhaseUnresolved(NhSpectraError):
    """Contour phase steps could not be refined below the safe bound."""


class OpenCurve(NhSpectraError):
    """Polygonization gap too large to close a sub-boundary loop."""


class NewtonDivergence(NhSpectraError):
    """Two-parameter Newton refinement failed for a crossing candidate."""


class RadiusUnderflow(NhSpectraError):
    """Local branches could not be separated above the minimal radius."""


class ConfigInvalid(NhSpectraError):
    """Run configuration failed validation."""
