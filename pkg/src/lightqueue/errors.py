"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so keep the hierarchy flat
and the meanings disjoint.
"""


class LightqueueError(Exception):
    pass


class ConfigError(LightqueueError):
    """Bad or inconsistent user configuration."""


class PoleError(LightqueueError):
    """Evaluation requested at or across a singular point of a transform."""


class SingularMatrixError(LightqueueError):
    """Transfer-matrix inversion attempted on (s, tau) lying on a clearing curve."""


class ConvergenceError(LightqueueError):
    """Quadrature refinement failed to settle within tolerance."""


class StabilityError(LightqueueError):
    """Direct integrator norm grew past the configured guard value."""


class GridError(LightqueueError):
    """Grids of two objects are incompatible for the requested operation."""


class DegenerateDataError(LightqueueError):
    """An operation's input carries no usable mass (e.g. an all-negative
    reference slice after clipping)."""
