"""Exception hierarchy shared by all modules.

Everything user-facing derives from TorusMirrorError so the CLI can map
library failures to exit codes without enumerating modules.
"""


class TorusMirrorError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(TorusMirrorError):
    """Invalid input data: broken invariants, malformed scenes, singular matrices."""


class TransversalityError(ValidationError):
    """A curve meets the zero section tangentially (or nearly so)."""


class DecayError(TorusMirrorError):
    """Section coefficients are not rapidly decreasing; evaluation refused."""


class UnsupportedError(TorusMirrorError):
    """The requested operation is outside the implemented shape of inputs."""


class WindowError(TorusMirrorError):
    """A truncation window is too small for the requested accuracy."""


class NumericsError(TorusMirrorError):
    """An internal numerical cross-check failed (inconsistent scan, bad residual)."""
