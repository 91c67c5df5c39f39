"""Exception types shared across the package."""


class CtwaveError(Exception):
    """Base class for all ctwave errors."""


class FocalPointError(CtwaveError):
    """Tangent matrix has m_qp ~ 0; action second derivatives diverge."""


class NoConvergenceError(CtwaveError):
    """An iterative solve (Newton, secant) failed to converge."""


class NearCausticError(CtwaveError):
    """Root refinement attempted too close to a phase-space caustic."""


class CausticDivergenceError(CtwaveError):
    """Semiclassical prefactor evaluated at a vanishing m_qq + i m_qp."""


class NoTrajectoryError(CtwaveError):
    """No classical trajectory satisfies the requested boundary data."""


class MissingMainFamilyError(CtwaveError):
    """No trajectory family contains the central (w = 0) trajectory."""


class BranchContinuityError(CtwaveError):
    """Consecutive prefactor values jumped by >= pi/2 in phase."""


class DomainError(CtwaveError):
    """Evaluation requested outside the physical domain (e.g. behind a wall)."""


class BoundaryLeakError(CtwaveError):
    """Grid wavefunction developed non-negligible boundary amplitude."""


class NotConvergedError(CtwaveError):
    """Grid refinement failed to converge to the requested tolerance."""


class ConfigError(CtwaveError):
    """Scenario configuration is missing or invalid."""


class GridMismatchError(CtwaveError):
    """Two wavefunction files do not share the same x_f grid."""
