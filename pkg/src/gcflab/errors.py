"""Exception types shared across the package."""


class GCFError(Exception):
    """Base class for package errors."""


class CFLError(GCFError):
    """Requested time step exceeds the stability bound."""


class ScenarioError(GCFError):
    """Invalid scenario configuration."""


class FrameError(GCFError):
    """Local chart frame could not be established (gradient band violated)."""


class InsufficientDataError(GCFError):
    """Too few sample points for a fit."""
