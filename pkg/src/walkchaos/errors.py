"""Semantic exceptions shared across the package."""


class WalkchaosError(Exception):
    """Base class for all package errors."""


class UnsupportedDomainError(WalkchaosError, ValueError):
    """Analytic operation asked for a domain kind it does not support."""


class SubResolutionError(WalkchaosError, ValueError):
    """A requested radius is below the lattice resolution floor (2h)."""


class QuadratureError(WalkchaosError, RuntimeError):
    """Adaptive quadrature failed to converge to the requested tolerance."""


class InsufficientSamplesError(WalkchaosError, ValueError):
    """A statistical check received fewer samples than its validity floor."""
