"""Intensity-noise spectra, heating rates and the differentiator temperature.

Spectral densities are single-sided in angular frequency, normalized so
that the integral over omega in [0, inf) is the mean-square fractional
intensity fluctuation.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, optimize

from .constants import C, HBAR, KB
from .errors import NumericalError, ValidationError
from .force import feedback_force
from .lti import RationalTransferFunction, evaluate

__all__ = [
    "SINGLE_SIDED_ANGULAR",
    "NoiseSpectrum",
    "HeatingBudget",
    "heating_from_psd",
    "incident_shot_psd",
    "intracavity_power",
    "shot_noise_psd",
    "heating_shot",
    "heating_freespace",
    "optimal_unity_gain_velocity",
    "temperature_differentiator",
    "thermal_psd",
    "heating_collective",
    "heating_budget",
    "balance_temperature",
    "scan_optimal_velocity",
]

SINGLE_SIDED_ANGULAR = "single-sided-angular"
SOURCES = ("shot", "photon", "detection", "thermal", "white", "total", "estimate")


@dataclass(frozen=True)
class NoiseSpectrum:
    omegas: np.ndarray
    density: np.ndarray
    source: str = "total"
    normalization: str = SINGLE_SIDED_ANGULAR

    def __post_init__(self):
        if self.normalization != SINGLE_SIDED_ANGULAR:
            raise ValidationError(f"unsupported PSD normalization {self.normalization!r}")
        if self.source not in SOURCES:
            raise ValidationError(f"unknown noise source {self.source!r}")
        w = np.asarray(self.omegas, dtype=float)
        s = np.asarray(self.density, dtype=float)
        if w.shape != s.shape or w.ndim != 1:
            raise ValidationError("omegas and density must be matching 1-D arrays")
        if w.size > 1 and np.any(np.diff(w) <= 0):
            raise ValidationError("frequency grid must be increasing")
        if np.any(s < 0):
            raise ValidationError("spectral density must be non-negative")
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "density", s)

    def __add__(self, other: NoiseSpectrum) -> NoiseSpectrum:
        if other.normalization != self.normalization:
            raise ValidationError("cannot add spectra with different normalizations")
        if not np.array_equal(other.omegas, self.omegas):
            raise ValidationError("cannot add spectra on different grids")
        return NoiseSpectrum(self.omegas, self.density + other.density, "total")

    def integral(self) -> float:
        """Trapezoidal integral over the grid, i.e. the band-limited variance."""
        return float(integrate.trapezoid(self.density, self.omegas))

    def rows(self):
        for w, s in zip(self.omegas, self.density):
            yield (float(w), float(s), self.source)


@dataclass(frozen=True)
class HeatingBudget:
    w_shot: float
    w_freespace: float
    w_collective: float
    w_cool: float
    net: float

    def __post_init__(self):
        total = self.w_shot + self.w_freespace + self.w_collective + self.w_cool
        if not math.isclose(total, self.net, rel_tol=1e-12, abs_tol=1e-300):
            raise ValidationError("net must equal the sum of the heating and cooling terms")

    @classmethod
    def from_terms(cls, w_shot, w_freespace, w_collective, w_cool):
        return cls(w_shot, w_freespace, w_collective, w_cool,
                   w_shot + w_freespace + w_collective + w_cool)

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _check_q(q):
    if not 0.0 < q <= 1.0:
        raise ValidationError(f"detector quantum efficiency q must lie in (0, 1], got {q!r}")


def _maybe_scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def heating_from_psd(U0, k, m, S_at_2kv, quantum=False):
    """Momentum-diffusion heating pi k^2 U0^2 S(2kv) / m.

    ``quantum=True`` doubles it to account for dipole fluctuations.
    """
    S = np.asarray(S_at_2kv, dtype=float)
    if np.any(S < 0):
        raise ValidationError("spectral density must be non-negative")
    w = math.pi * k**2 * U0**2 * S / m
    return _maybe_scalar(2.0 * w if quantum else w)


def incident_shot_psd(P_i, k):
    """Fractional shot-noise density hbar c k / (pi P_i) of the incident light."""
    if not P_i > 0:
        raise ValidationError("incident power must be positive")
    return HBAR * C * k / (math.pi * P_i)


def intracavity_power(P_i, finesse):
    """P_c = P_i F / (2 pi) for the cavity detuned by one half-linewidth."""
    return P_i * finesse / (2.0 * math.pi)


def shot_noise_psd(F, P_c, k, q, H: RationalTransferFunction, omega, part="total"):
    """Closed-loop intracavity shot-noise density.

    ``part`` selects the light shot noise ("photon"), the photodetection
    noise written onto the light by the loop ("detection") or their sum.
    Valid for omega well below the cavity linewidth.
    """
    _check_q(q)
    if not P_c > 0:
        raise ValidationError("intracavity power must be positive")
    base = F * HBAR * C * k / (2.0 * math.pi**2 * P_c)
    resp = evaluate(H, omega)
    photon = base / resp.closed_loop_mag_sq
    detection = base * resp.mag_sq * (1.0 / q - 1.0) / resp.closed_loop_mag_sq
    try:
        out = {"photon": photon, "detection": detection, "total": photon + detection}[part]
    except KeyError:
        raise ValidationError(f"unknown part {part!r}") from None
    return _maybe_scalar(out)


def heating_shot(E_r, eta, gamma_sc, H, k, v, q):
    """Closed-loop shot-noise heating E_r eta Gamma (2 + |H|^2 (1/q - 1)) / |1 + H|^2."""
    _check_q(q)
    resp = evaluate(H, 2.0 * k * np.asarray(v, dtype=float))
    return _maybe_scalar(E_r * eta * gamma_sc * (2.0 + resp.mag_sq * (1.0 / q - 1.0))
                         / resp.closed_loop_mag_sq)


def heating_freespace(E_r, gamma_sc):
    return 2.0 * E_r * gamma_sc


def optimal_unity_gain_velocity(q, eta, k, m):
    """Differentiator unity-gain velocity (1/q - 1 + 2/eta) hbar k / m."""
    _check_q(q)
    if not eta > 0:
        raise ValidationError("eta must be positive")
    return (1.0 / q - 1.0 + 2.0 / eta) * HBAR * k / m


def temperature_differentiator(E_r, eta, q):
    """Final temperature in kelvin, k_B T = 4 E_r (1 + eta)(1/q - 1 + 2/eta) / eta."""
    _check_q(q)
    if not eta > 0:
        raise ValidationError("eta must be positive")
    return 4.0 * E_r * (1.0 + eta) * (1.0 / q - 1.0 + 2.0 / eta) / eta / KB


def thermal_psd(N, zeta, k, v_th, H, omega):
    """Closed-loop intensity noise written by N other atoms at thermal speed v_th."""
    if N < 0:
        raise ValidationError("N must be non-negative")
    if not v_th > 0:
        raise ValidationError("v_th must be positive")
    omega = np.asarray(omega, dtype=float)
    resp = evaluate(H, omega)
    open_loop = N * zeta**2 / (math.sqrt(8.0 * math.pi) * k * v_th) * np.exp(
        -(omega**2) / (8.0 * k**2 * v_th**2))
    return _maybe_scalar(open_loop / resp.closed_loop_mag_sq)


def heating_collective(E_r, eta, gamma_sc, N, k, v_th, H, v):
    """Heating of one atom at velocity v by the intensity noise of N thermal atoms."""
    if N < 0:
        raise ValidationError("N must be non-negative")
    v = np.asarray(v, dtype=float)
    resp = evaluate(H, 2.0 * k * v)
    w = (E_r * eta * gamma_sc / resp.closed_loop_mag_sq
         * math.sqrt(2.0 * math.pi) * N * eta * gamma_sc / (2.0 * k * v_th)
         * np.exp(-(v**2) / (2.0 * v_th**2)))
    return _maybe_scalar(w)


def heating_budget(E_r, eta, gamma_sc, H, k, v, q, r=-1.0, N=0, v_th=None) -> HeatingBudget:
    """All heating and cooling powers for one atom at velocity v."""
    w_col = 0.0
    if N:
        if v_th is None:
            raise ValidationError("v_th is required when N > 0")
        w_col = float(heating_collective(E_r, eta, gamma_sc, N, k, v_th, H, v))
    return HeatingBudget.from_terms(
        float(heating_shot(E_r, eta, gamma_sc, H, k, v, q)),
        float(heating_freespace(E_r, gamma_sc)),
        w_col,
        float(feedback_force(H, r, eta, gamma_sc, k, v) * v),
    )


def _net_power(v, u, q, eta):
    # Differentiator loop in recoil units (hbar = k = m = 1, eta Gamma_sc = 1):
    # f v + W_sn + W_fs with E_r = 1/2.
    c = 1.0 / q - 1.0
    v2 = v * v
    return (-u * v2 + (2.0 * u * u + c * v2) / 2.0) / (u * u + v2) + 1.0 / eta


def balance_temperature(u, q, eta, k, m, ansatz="rms"):
    """k_B T at which cooling balances heating for the differentiator loop.

    ``ansatz="rms"`` evaluates the power balance at the single speed
    v = sqrt(k_B T / m); ``ansatz="gaussian"`` averages it over a 1-D
    Maxwell-Boltzmann distribution. Returns the temperature in kelvin, or
    inf when heating wins at every temperature.
    """
    _check_q(q)
    vr = HBAR * k / m
    ur = u / vr
    if ansatz == "rms":
        def g(a):
            return _net_power(math.sqrt(a), ur, q, eta)
    elif ansatz == "gaussian":
        def g(a):
            s = math.sqrt(a)
            val, _ = integrate.quad(
                lambda x: _net_power(s * x, ur, q, eta) * math.exp(-x * x / 2.0),
                -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11)
            return val / math.sqrt(2.0 * math.pi)
    else:
        raise ValidationError(f"unknown ansatz {ansatz!r}")
    lo, hi = 1e-8, 1e8
    if g(lo) <= 0:
        raise NumericalError("no heating at low temperature; balance is ill-posed")
    if g(hi) > 0:
        return math.inf
    a = optimize.brentq(g, lo, hi, xtol=1e-14, rtol=1e-13)
    # a = k_B T in units of m v_r^2 = 2 E_r
    return a * m * vr**2 / KB


def scan_optimal_velocity(q, eta, k, m, ansatz="rms", span=(0.2, 5.0), points=401):
    """Grid-scan u over ``span`` times the closed-form optimum.

    Returns ``(u_best, T_best, u_grid, T_grid)``.
    """
    u_star = optimal_unity_gain_velocity(q, eta, k, m)
    grid = u_star * np.geomspace(span[0], span[1], points)
    temps = np.array([balance_temperature(u, q, eta, k, m, ansatz) for u in grid])
    i = int(np.argmin(temps))
    return float(grid[i]), float(temps[i]), grid, temps
