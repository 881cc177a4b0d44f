"""External-feedback laser cooling: loop algebra, forces, noise, ensembles and simulation."""

from . import constants, ensemble, force, lti, noise, optics
from .errors import (FbcoolError, ImproperLoopError, NonStationaryError, NumericalError,
                     PoleOnAxisError, SimulationInstabilityError, UnstableLoopError,
                     ValidationError)
from .lti import RationalTransferFunction, evaluate, reference_loop, is_closed_loop_stable

__version__ = "0.1.0"

__all__ = [
    "constants", "ensemble", "force", "lti", "noise", "optics",
    "FbcoolError", "ImproperLoopError", "NonStationaryError", "NumericalError",
    "PoleOnAxisError", "SimulationInstabilityError", "UnstableLoopError", "ValidationError",
    "RationalTransferFunction", "evaluate", "reference_loop", "is_closed_loop_stable",
]
