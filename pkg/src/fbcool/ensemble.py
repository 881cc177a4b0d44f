"""Stochastic-cooling figures of merit for a thermal sample of N particles.

All thermal averages are over the 1-D velocity distribution along the
cavity axis; rates are 1-D axis rates.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .constants import AMU, HBAR, KB
from .errors import NumericalError, ValidationError
from .force import feedback_force, require_stable
from .lti import RationalTransferFunction, reference_loop
from .noise import heating_collective
from .optics import recoil_energy, wavenumber

__all__ = [
    "EnsembleScenario",
    "PRESETS",
    "CAH_MASS",
    "thermal_velocity",
    "normalized_cavity_rate",
    "cooling_rate_constant",
    "optimal_scatter_rate",
    "beam_length",
    "net_cooling_power",
    "cooling_rate_numeric",
    "scenario",
    "preset",
]

CAH_MASS = 41.0 * AMU  # Ca-40 + H-1; assumed, not quoted


def thermal_velocity(T, m):
    if not (T > 0 and m > 0):
        raise ValidationError("T and m must be positive")
    return math.sqrt(KB * T / m)


def normalized_cavity_rate(N, eta_gamma_sc, T):
    """Total scattering rate into the cavity in units of k_B T / hbar (times 2)."""
    return 2.0 * N * eta_gamma_sc * HBAR / (KB * T)


def cooling_rate_constant(N, k, v_th, gamma_bar):
    """gamma_d ~ (k v_th / 6N)(2 Gamma_bar - Gamma_bar^2)."""
    if N < 1:
        raise ValidationError("N must be at least 1")
    return k * v_th / (6.0 * N) * (2.0 * gamma_bar - gamma_bar**2)


def optimal_scatter_rate(N, T):
    """eta Gamma_sc that puts the sample at Gamma_bar = 1."""
    if N < 1 or not T > 0:
        raise ValidationError("need N >= 1 and T > 0")
    return KB * T / (2.0 * N * HBAR)


def beam_length(N, wavelength):
    """Cooling length 6 N lambda / pi of a thermal beam, independent of its speed."""
    return 6.0 * N * wavelength / math.pi


def _gauss_hermite_mean(fn, sigma, rtol=1e-8, nodes=64, max_nodes=256):
    # hermegauss overflows beyond a few hundred nodes
    prev = None
    n = nodes
    while n <= max_nodes:
        x, w = np.polynomial.hermite_e.hermegauss(n)
        val = float(np.sum(w * fn(sigma * x)) / math.sqrt(2.0 * math.pi))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        prev, n = val, 2 * n
    # slow convergence when the integrand has poles near the real axis
    val, err = integrate.quad(lambda v: float(fn(np.array([v]))[0]) * math.exp(-v * v / (2 * sigma**2)),
                              -np.inf, np.inf, epsabs=0.0, epsrel=rtol, limit=500)
    val /= math.sqrt(2.0 * math.pi) * sigma
    err /= math.sqrt(2.0 * math.pi) * sigma
    if err > 1e3 * rtol * abs(val):
        raise NumericalError(f"thermal average did not converge (estimated error {err:.3g})")
    return val


def net_cooling_power(u, N, eta, gamma_sc, k, m, T, H: RationalTransferFunction | None = None,
                      r=-1.0, rtol=1e-8):
    """Thermal average of f(v) v + W_N(v) in watts (negative when cooling).

    ``H`` is a loop in the normalized variable s / (2ku), the differentiator
    by default. Gauss-Hermite with 64 nodes, doubled until the relative
    change drops below ``rtol``.
    """
    H_norm = reference_loop("a") if H is None else H
    require_stable(H_norm)
    H_phys = H_norm.scaled(2.0 * k * u)
    v_th = thermal_velocity(T, m)
    E_r = recoil_energy(k, m)

    def integrand(v):
        out = feedback_force(H_phys, r, eta, gamma_sc, k, v, allow_unstable=True) * v
        if N:
            out = out + heating_collective(E_r, eta, gamma_sc, N, k, v_th, H_phys, v)
        return out

    return _gauss_hermite_mean(integrand, v_th, rtol)


def cooling_rate_numeric(u, N, eta, gamma_sc, k, m, T, H=None, r=-1.0):
    """-2 <W> / (k_B T), the thermal-average counterpart of gamma_d."""
    return -2.0 * net_cooling_power(u, N, eta, gamma_sc, k, m, T, H, r) / (KB * T)


@dataclass(frozen=True)
class EnsembleScenario:
    label: str
    N: float
    T: float
    m: float
    wavelength: float
    v_th: float
    eta_gamma_sc: float
    gamma_bar: float
    gamma_d: float
    L: float
    assumptions: dict = field(default_factory=dict)

    CSV_HEADER = ("label", "N", "T", "m", "lambda", "vth", "eta_gamma_sc", "gamma_bar", "gamma_d", "L")

    def row(self):
        return (self.label, self.N, self.T, self.m, self.wavelength, self.v_th,
                self.eta_gamma_sc, self.gamma_bar, self.gamma_d, self.L)

    def to_dict(self):
        return asdict(self)


def scenario(label, N, T, m, wavelength, assumptions=None) -> EnsembleScenario:
    """Fill the derived fields at the optimal operating point Gamma_bar = 1.

    ``N = 0`` is accepted and gives zero rates.
    """
    if N < 0 or not (T > 0 and m > 0 and wavelength > 0):
        raise ValidationError("need N >= 0 and positive T, m, wavelength")
    k = wavenumber(wavelength)
    v_th = thermal_velocity(T, m)
    if N == 0:
        rate, gbar, gamma_d = 0.0, 0.0, 0.0
    else:
        rate = optimal_scatter_rate(N, T)
        gbar = normalized_cavity_rate(N, rate, T)
        gamma_d = cooling_rate_constant(N, k, v_th, gbar)
    return EnsembleScenario(label, float(N), float(T), float(m), float(wavelength), v_th,
                            rate, gbar, gamma_d, beam_length(N, wavelength), dict(assumptions or {}))


PRESETS = {
    "cah-trap": dict(N=1e8, T=0.4, m=CAH_MASS, wavelength=760e-9),
    "cah-room": dict(N=1e6, T=300.0, m=CAH_MASS, wavelength=760e-9),
}


def preset(name: str) -> EnsembleScenario:
    try:
        params = PRESETS[name]
    except KeyError:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return scenario(name, assumptions={"mass": "41 amu (CaH), assumed"}, **params)
