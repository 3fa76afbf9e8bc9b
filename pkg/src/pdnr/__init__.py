"""Pulse-driven nonlinear resonator: master equation, quantum state diffusion,
Wigner functions and mean-field analysis in a truncated Fock basis."""

from .errors import (ConfigError, DivergenceError, InvalidArgumentError, InvalidDimensionError,
                     NormCollapseError, PDNRError, PositivityError, TruncationError)
from .model import ContinuousWave, ModelParams, PulseTrain, classify_regime, pulse_envelope

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ContinuousWave", "DivergenceError", "InvalidArgumentError",
    "InvalidDimensionError", "ModelParams", "NormCollapseError", "PDNRError", "PositivityError",
    "PulseTrain", "TruncationError", "classify_regime", "pulse_envelope", "__version__",
]
