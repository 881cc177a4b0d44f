"""Ready-made configurations used by the CLI and the verification suite."""

from __future__ import annotations

import math

import numpy as np

from ..constants import AMU, HBAR
from ..lti import RationalTransferFunction, reference_loop
from ..optics import OpticalSystem, recoil_energy, wavenumber
from .langevin import NoiseSwitches, SimConfig

__all__ = ["recoil_system", "drag_config", "time_step"]


def recoil_system(*, eta=1.0, q=1.0, rate_over_recoil=0.08, depth_over_recoil=0.05,
                  wavelength=852e-9, mass=133.0 * AMU) -> OpticalSystem:
    """System specified in recoil units.

    ``rate_over_recoil`` is eta Gamma_sc in units of E_r / hbar and
    ``depth_over_recoil`` is U0 / E_r. Cavity geometry only enters through eta.
    """
    k = wavenumber(wavelength)
    E_r = recoil_energy(k, mass)
    return OpticalSystem.build(wavelength=wavelength, mass=mass, eta=eta,
                               eta_gamma_sc=rate_over_recoil * E_r / HBAR,
                               trap_depth=depth_over_recoil * E_r, q=q)


def time_step(fastest_omega, samples_per_cycle=20.0):
    return 2.0 * math.pi / (samples_per_cycle * fastest_omega)


def drag_config(system: OpticalSystem, loop: str | RationalTransferFunction, u, velocities, *,
                rolloff_factor=10.0, periods=12.0, settle=None, samples_per_cycle=20.0,
                hold="foh") -> SimConfig:
    """Velocity-clamped, noise-free runs that measure the cycle-averaged force.

    One trajectory per velocity. The loop is normalized (s / 2ku); the
    roll-off sits ``rolloff_factor`` above the fastest Doppler frequency.
    """
    H_norm = reference_loop(loop) if isinstance(loop, str) else loop
    k = system.k
    v = np.asarray(velocities, dtype=float)
    H = H_norm.scaled(2.0 * k * u)
    w_max = 2.0 * k * float(np.max(np.abs(v)))
    rolloff = rolloff_factor * max(w_max, 2.0 * k * u) if H.relative_degree < 0 else None
    fastest = max(w_max, rolloff or 0.0)
    poles = np.roots(H.characteristic_polynomial()[::-1])
    if poles.size:
        fastest = max(fastest, float(np.max(np.abs(poles))))
    dt = time_step(fastest, samples_per_cycle)
    w_min = 2.0 * k * float(np.min(np.abs(v[v != 0]))) if np.any(v != 0) else 2.0 * k * u
    if settle is None:
        slow = float(np.min(np.abs(poles.real))) if poles.size else 2.0 * k * u
        settle = 15.0 / slow
    window = periods * 2.0 * math.pi / w_min
    burn = int(math.ceil(settle / dt))
    n_steps = burn + int(math.ceil(window / dt))
    return SimConfig(system=system, loop=H, dt=dt, n_steps=n_steps, n_trajectories=v.size,
                     rolloff_omega=rolloff, noise=NoiseSwitches(), v0=v.tolist(), x0=0.0,
                     clamp_velocity=True, burn_in=burn, decimation=max(1, n_steps // 1000),
                     hold=hold, samples_per_cycle=samples_per_cycle)
