"""Exception types shared across the package."""

from __future__ import annotations


class Drops2dError(Exception):
    """Base class for all package errors."""


class InvalidRegionError(Drops2dError):
    """Region violates a structural invariant (degenerate, non-simple, bad signs)."""


class IllConditionedBoundaryError(Drops2dError):
    """Boundary has a near-cusp vertex; discrete curvature is unreliable."""


class TopologyChangeError(Drops2dError):
    """An offset or update would merge, split or annihilate rings."""


class ResolutionTooCoarseError(Drops2dError):
    """Mesh spacing too large for the region's feature size or cell budget."""


class AssemblyError(Drops2dError):
    """Kernel matrix cannot be assembled (coincident centers, empty mesh)."""


class SolverFailureError(Drops2dError):
    """Equilibrium solver did not reach tolerance; carries the best iterate."""

    def __init__(self, message, best_masses=None, residual=None):
        super().__init__(message)
        self.best_masses = best_masses
        self.residual = residual


class ConsistencyError(Drops2dError):
    """Operands belong to different regions/meshes or disagree structurally."""


class NothingToRelaxError(Drops2dError):
    """Recovery construction requested at lambda <= lambda_Omega."""


class GeometryError(Drops2dError):
    """A geometric construction (placement, offset) is infeasible."""


class StalledFlowError(Drops2dError):
    """Gradient flow rejected too many consecutive steps."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class UnreliableTraceError(Drops2dError):
    """Too many boundary vertices were flagged during half-derivative extraction."""
