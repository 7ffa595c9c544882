"""Exception hierarchy shared across the package."""


class VidtokError(Exception):
    """Base class for all package errors."""


class DimensionError(VidtokError, ValueError):
    """Shapes or vector lengths do not agree."""


class ConfigurationError(VidtokError, ValueError):
    """A hyperparameter or option is outside its valid range."""


class BudgetError(VidtokError, ValueError):
    """A token budget cannot be placed within the available capacity."""


class SessionError(VidtokError):
    """A streaming session received a frame it cannot accept."""


class InvariantError(VidtokError, AssertionError):
    """An internal invariant was violated. Should be unreachable."""
