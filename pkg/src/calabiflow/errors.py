"""Exception types shared across the package."""


class CalabiFlowError(Exception):
    """Base class for all package errors."""


class DegenerateClassError(CalabiFlowError):
    """Cohomology data produced a vanishing complex number where an argument is needed."""


class RegimeError(CalabiFlowError):
    """Input lies outside the phase regime an operation requires."""


class ProfileError(CalabiFlowError):
    """A diffusion profile violates one of its structural bounds."""


class NonfiniteStateError(CalabiFlowError):
    """A nodal value became inf/nan during time stepping (blowup candidate)."""

    def __init__(self, t, location=None):
        super().__init__(f"nonfinite nodal value at t={t} (x~{location})")
        self.t = t
        self.location = location


class CriticalPointError(CalabiFlowError):
    """Level tracing ran into a near-critical point of the harmonic polynomial."""


class WindowError(CalabiFlowError):
    """The requested polar window cannot satisfy the slope hypotheses.

    Carries ``largest_admissible`` when a maximal feasible parameter is known.
    """

    def __init__(self, msg, largest_admissible=None):
        super().__init__(msg)
        self.largest_admissible = largest_admissible


class ConstructionError(CalabiFlowError):
    """Scenario initial data could not be built with the required clearances."""


class ExpiredBarrierError(CalabiFlowError):
    """The shrinking-circle barrier was queried past its lifetime t >= R/4."""


class BarrierCrossingError(CalabiFlowError):
    """An evolving state crossed a certified barrier (falsifies the implementation)."""

    def __init__(self, msg, t=None, gap=None):
        super().__init__(msg)
        self.t = t
        self.gap = gap


class DegenerateStencilError(CalabiFlowError):
    """Three-point curvature stencil is degenerate (coincident points)."""


class SelfIntersectionError(CalabiFlowError):
    """A polyline stopped being simple."""


class UsageError(CalabiFlowError):
    """Bad CLI arguments or config keys."""
