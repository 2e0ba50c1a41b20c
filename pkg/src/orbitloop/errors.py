"""Exception hierarchy shared across the package."""


class OrbitloopError(Exception):
    """Base class for all orbitloop-specific errors."""


class DimensionError(OrbitloopError, ValueError):
    """Matrix or vector dimensions are inconsistent with the operation."""


class NumericalError(OrbitloopError, RuntimeError):
    """An iterative numerical procedure failed to converge or overflowed."""


class SingularMatrixError(NumericalError):
    """Linear solve hit a numerically singular coefficient matrix."""


class NoUniqueSolutionError(NumericalError):
    """Lyapunov equation has no unique solution (resonant spectrum)."""


class SynthesisError(OrbitloopError):
    """Controller or observer synthesis failed (uncontrollable or
    unobservable pair, infeasible problem)."""


class UndefinedNormError(OrbitloopError):
    """H-infinity norm requested for an unstable system."""


class GammaRangeError(OrbitloopError, ValueError):
    """Upper end of the requested H-infinity attenuation range is infeasible."""


class DegenerateGeometryError(OrbitloopError, ValueError):
    """Boundary-value geometry is degenerate (identical endpoints)."""


class InfeasibleTransferError(OrbitloopError):
    """No transfer orbit exists for the requested geometry and flight time."""


class SolverError(NumericalError):
    """Root-finding iteration exhausted its budget."""


class NotApplicableError(OrbitloopError):
    """Requested derived quantity does not exist for this record."""


class ScenarioError(OrbitloopError, ValueError):
    """Scenario file is malformed or violates an invariant."""
