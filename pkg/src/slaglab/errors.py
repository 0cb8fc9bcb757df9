"""Exception types raised across the package."""

from __future__ import annotations


class SlagError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SlagError):
    pass


class NonLagrangianInput(SlagError):
    pass


class NotTransversal(SlagError):
    pass


class DegenerateProjection(SlagError):
    pass


class QuadratureNonConvergence(SlagError):
    pass


class RadiusTooSmall(SlagError):
    pass


class NoConvergence(SlagError):
    pass


class InfeasibleTargets(SlagError):
    pass


class AlphaTooLarge(SlagError):
    pass


class PlaneMismatch(SlagError):
    pass


class ParameterInconsistency(SlagError):
    pass


class ChartDomainError(SlagError):
    pass


class SingularMetric(SlagError):
    pass


class ResolutionInfeasible(SlagError):
    pass


class EigSolverNonConvergence(SlagError):
    pass


class ConfigError(SlagError):
    """Malformed or out-of-range configuration."""
