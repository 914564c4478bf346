"""Exception hierarchy shared by all modules."""


class P1trError(Exception):
    """Base class for every domain error raised by the package."""


class DegenerateCurve(P1trError):
    """The cubic 4x^3 + 2tx + u has (numerically) coinciding roots."""


class QuadratureFailure(P1trError):
    """A contour or path integral did not reach the requested tolerance."""


class BadModulus(P1trError):
    """The modular parameter tau does not lie in the upper half plane."""


class LatticePoint(P1trError):
    """An elliptic function was requested at (or too close to) a lattice point."""


class BranchPointInput(P1trError):
    """The requested point x is (numerically) a branch point of the curve."""


class NoConvergence(P1trError):
    """An iterative solver exhausted its step budget."""


class DiagonalPole(P1trError):
    """The two arguments of the Bergman kernel coincide modulo the lattice."""


class RamificationPole(P1trError):
    """A correlator argument sits on a ramification point or its contour."""


class BudgetExceeded(P1trError):
    """The requested (g, n) or WKB order exceeds the configured budget."""


class MissingDerivativeTable(P1trError):
    """A nu-derivative of a free energy needed for a coefficient is absent."""


class UnlabeledCurve(P1trError):
    """A Stokes curve lacks its sign or half-period coordinates."""


class StallDetected(P1trError):
    """The trajectory tracer's step size collapsed."""


class MaxStepsExceeded(P1trError):
    """The trajectory tracer ran out of steps before terminating."""


class AmbiguousLattice(P1trError):
    """A path integral does not round cleanly to a half-period."""


class PathCrossesCut(P1trError):
    """An integration path runs into a branch point or its cut."""
