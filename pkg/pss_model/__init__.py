"""
pss_model: response of a PSS1A stabilizer and AVR to transients of a
synchronous generator coupled to a low-inertia grid.

Time-domain simulation, linear and modal closed forms, a sine-envelope
input and their spectra.
"""

from .errors import (
    ConfigError,
    NumericalError,
    ParameterError,
    PssModelError,
    SynchronismError,
)
from .grid_dynamics import MachineParams, Model, ReducedParams, TransientEvent, reduce_params
from .stabilizer_blocks import BlockCascade, StabilizerParams

__version__ = "1.0.0"

__all__ = [
    "BlockCascade",
    "ConfigError",
    "MachineParams",
    "Model",
    "NumericalError",
    "ParameterError",
    "PssModelError",
    "ReducedParams",
    "StabilizerParams",
    "SynchronismError",
    "TransientEvent",
    "reduce_params",
]
