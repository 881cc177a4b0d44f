"""Independent time-domain check of the analytic force, noise and temperature results."""

from .filters import DiscreteLoopFilter, StateSpaceFilter, realize, rolled_off
from .langevin import (NoiseSwitches, SimConfig, SimResult, TemperatureEstimate,
                       equilibrium_temperature, heating_slope, photon_shot_density, run)
from .psd import ColoredNoise, estimate_psd, white_sigma
from .setups import drag_config, recoil_system

__all__ = [
    "DiscreteLoopFilter", "StateSpaceFilter", "realize", "rolled_off",
    "NoiseSwitches", "SimConfig", "SimResult", "TemperatureEstimate",
    "equilibrium_temperature", "heating_slope", "photon_shot_density", "run",
    "ColoredNoise", "estimate_psd", "white_sigma",
    "drag_config", "recoil_system",
]
