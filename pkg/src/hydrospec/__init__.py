"""Spectral analysis, multilayer integration and closed-form flows for the
hydrostatic free-surface Euler system in a vertical Lagrangian variable."""

from .errors import (
    CharacteristicEscapeError,
    EssentialRangeError,
    HydrospecError,
    HypothesisError,
    PoleError,
    PositivityError,
    ProfileError,
    QuadratureError,
    RootCountError,
    SolverAbort,
    SymmetryError,
    TheoryMismatchError,
    WaveSpeedError,
)
from .profiles import ContinuousProfile, LayerState, load_tabulated, preset_profile, project_p0

__all__ = [
    "CharacteristicEscapeError",
    "ContinuousProfile",
    "EssentialRangeError",
    "HydrospecError",
    "HypothesisError",
    "LayerState",
    "PoleError",
    "PositivityError",
    "ProfileError",
    "QuadratureError",
    "RootCountError",
    "SolverAbort",
    "SymmetryError",
    "TheoryMismatchError",
    "WaveSpeedError",
    "load_tabulated",
    "preset_profile",
    "project_p0",
]
__version__ = "0.1.0"
