"""Resonance fluorescence of a driven two-level atom: dynamics, correlations, spectra."""

from .core import BlochState, NumericalFailure, SystemParams, stationary_state

__version__ = "0.1.0"

__all__ = ["BlochState", "NumericalFailure", "SystemParams", "stationary_state", "__version__"]
