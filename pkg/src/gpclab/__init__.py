"""Generalized predictive control on incremental state-space CARIMA models."""

__version__ = "0.1.0"

from .carima import CarimaModel, Signal, markov, plant_step, realize
from .closedloop import (
    error_signal,
    loop_operators,
    stability,
    steady_state,
)
from .controller import ControllerSpec, LoopState, build_gains, gpc_step, igmvc_step
from .errors import (
    ConfigError,
    GpcError,
    NonCausalError,
    SingularGainError,
    UnstableLoopError,
)
from .prediction import build as build_prediction
from .prediction import predict
from .simkit import SignalGen, SimRecord, run
from .zpoly import LaurentPoly, RationalTF

__all__ = [
    "CarimaModel", "Signal", "markov", "plant_step", "realize",
    "error_signal", "loop_operators", "stability", "steady_state",
    "ControllerSpec", "LoopState", "build_gains", "gpc_step", "igmvc_step",
    "ConfigError", "GpcError", "NonCausalError", "SingularGainError", "UnstableLoopError",
    "build_prediction", "predict", "SignalGen", "SimRecord", "run",
    "LaurentPoly", "RationalTF",
]
