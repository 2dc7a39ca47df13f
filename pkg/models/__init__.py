"""
Data models for the BD-RIS full-duplex simulator.
"""

from .config import (
    ExperimentSpec,
    PddOptions,
    RisConfig,
    ScenarioConfig,
    SolverOptions,
)
from .errors import BdrisError, InvalidArgumentError, NumericalFailureError
from .state import AuxVars, BeamKind, ChannelSet, SolverResult, TransceiverState

__all__ = [
    "AuxVars",
    "BdrisError",
    "BeamKind",
    "ChannelSet",
    "ExperimentSpec",
    "InvalidArgumentError",
    "NumericalFailureError",
    "PddOptions",
    "RisConfig",
    "ScenarioConfig",
    "SolverOptions",
    "SolverResult",
    "TransceiverState",
]
