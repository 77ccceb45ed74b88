"""Exception hierarchy shared by the numerical modules."""

from __future__ import annotations


class HydrospecError(Exception):
    """Base class for all errors raised by this package."""


class ProfileError(HydrospecError, ValueError):
    """Invalid profile data (non-positive thickness, malformed table, ...)."""


class QuadratureError(HydrospecError):
    """Adaptive quadrature failed to reach the requested tolerance.

    ``segment`` is the index of the worst (least converged) integration
    segment, which for layer averages is the layer index.
    """

    def __init__(self, message: str, segment: int | None = None, error: float | None = None):
        super().__init__(message)
        self.segment = segment
        self.error = error


class EssentialRangeError(HydrospecError, ValueError):
    """The spectral function was evaluated on the essential range of the velocity."""


class SymmetryError(HydrospecError, ValueError):
    """The profile lacks the odd symmetry required by the imaginary-axis scan."""


class PoleError(HydrospecError, ZeroDivisionError):
    """A secular function was evaluated exactly at a layer velocity."""

    def __init__(self, message: str, layer: int):
        super().__init__(message)
        self.layer = layer


class RootCountError(HydrospecError):
    """Internal consistency failure: the root finder did not return 2N roots."""


class TheoryMismatchError(HydrospecError):
    """A computed spectrum contradicts a structure guaranteed by theory."""


class HypothesisError(HydrospecError, ValueError):
    """A profile does not satisfy the hypotheses required by an operation."""


class SolverAbort(HydrospecError):
    """Time integration aborted (positivity loss or wave-speed blow-up)."""

    def __init__(self, message: str, cell: int | None = None, layer: int | None = None, time: float | None = None):
        super().__init__(message)
        self.cell = cell
        self.layer = layer
        self.time = time


class PositivityError(SolverAbort):
    """A layer thickness became non-positive."""


class WaveSpeedError(SolverAbort):
    """The wave speed bound became non-finite."""


class CharacteristicEscapeError(HydrospecError):
    """A characteristic left the region where the field can be interpolated."""
