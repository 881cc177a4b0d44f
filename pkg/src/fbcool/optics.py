"""Atom-cavity-light parameters and the cavity transmission response.

Everything here is SI. The cavity is assumed fast compared with both the
loop bandwidth and the Doppler frequency 2kv, so the intracavity power
follows the instantaneous detuning.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .constants import EPS0, HBAR
from .errors import ValidationError

__all__ = [
    "CavityParams",
    "AtomParams",
    "CouplingDerived",
    "OpticalSystem",
    "derive_coupling",
    "from_polarizability",
    "transmission_exact",
    "transmission_linear",
    "resonator_slope",
    "cavity_scatter_fraction",
    "free_space_solid_angle",
    "recoil_energy",
    "finesse_for_eta",
    "wavenumber",
]


def _finite(**values):
    for name, x in values.items():
        if not math.isfinite(x):
            raise ValidationError(f"{name} must be finite, got {x!r}")


@dataclass(frozen=True)
class CavityParams:
    finesse: float
    waist: float
    k: float
    gamma_c: float
    delta_i: float = 0.0

    def __post_init__(self):
        _finite(finesse=self.finesse, waist=self.waist, k=self.k,
                gamma_c=self.gamma_c, delta_i=self.delta_i)
        for name in ("finesse", "waist", "k", "gamma_c"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class AtomParams:
    """Particle mass, free-space scattering rate and light-shift depth U0.

    Valid below saturation only; the scattering rate is taken as
    independent of velocity.
    """

    mass: float
    scatter_rate: float
    trap_depth: float

    def __post_init__(self):
        _finite(mass=self.mass, scatter_rate=self.scatter_rate, trap_depth=self.trap_depth)
        if not self.mass > 0:
            raise ValidationError("mass must be positive")
        if self.scatter_rate < 0:
            raise ValidationError("scatter_rate must be non-negative")

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass(frozen=True)
class CouplingDerived:
    eta: float
    zeta: float | None
    r: float
    E_r: float
    delta_omega_fs: float


def wavenumber(wavelength: float) -> float:
    return 2.0 * math.pi / wavelength


def cavity_scatter_fraction(finesse, k, waist):
    """eta = 6F / (pi k^2 w^2), the fraction scattered into one cavity direction."""
    return 6.0 * finesse / (math.pi * k**2 * waist**2)


def finesse_for_eta(eta, k, waist):
    return eta * math.pi * k**2 * waist**2 / 6.0


def free_space_solid_angle(k, waist):
    """Detection solid-angle fraction 3 / (k^2 w^2) without a resonator."""
    return 3.0 / (k**2 * waist**2)


def resonator_slope(delta_i, gamma_c):
    """Normalized transmission slope r = 2 delta_i gamma_c / (gamma_c^2 + delta_i^2)."""
    return 2.0 * delta_i * gamma_c / (gamma_c**2 + delta_i**2)


def recoil_energy(k, mass):
    return (HBAR * k) ** 2 / (2.0 * mass)


def derive_coupling(cav: CavityParams, atom: AtomParams, require_zeta: bool = False) -> CouplingDerived:
    """Derived coupling constants; zeta is None when U0 = 0.

    zeta = hbar eta Gamma_sc / U0 keeps the sign of U0.
    """
    eta = cavity_scatter_fraction(cav.finesse, cav.k, cav.waist)
    if atom.trap_depth == 0.0:
        if require_zeta:
            raise ValidationError("zeta is undefined for U0 = 0")
        zeta = None
    else:
        zeta = HBAR * eta * atom.scatter_rate / atom.trap_depth
    return CouplingDerived(
        eta=eta,
        zeta=zeta,
        r=resonator_slope(cav.delta_i, cav.gamma_c),
        E_r=recoil_energy(cav.k, atom.mass),
        delta_omega_fs=free_space_solid_angle(cav.k, cav.waist),
    )


def from_polarizability(alpha_re, E_c, k):
    """Scattering rate and potential depth from Re(alpha) and the antinode field.

    Returns ``(Gamma_sc, U0)`` with Gamma_sc = k^3 |Re(alpha) E_c|^2 / (6 pi eps0 hbar)
    and U0 = -|E_c|^2 Re(alpha) / 2.
    """
    _finite(alpha_re=alpha_re, E_c=E_c, k=k)
    gamma_sc = k**3 * abs(alpha_re * E_c) ** 2 / (6.0 * math.pi * EPS0 * HBAR)
    u0 = -abs(E_c) ** 2 * alpha_re / 2.0
    return gamma_sc, u0


def transmission_exact(cav: CavityParams, delta_at, eps_fb):
    """Fractional intracavity power change for total detuning delta_i - delta_at."""
    delta_t = cav.delta_i - np.asarray(delta_at, dtype=float)
    g2 = cav.gamma_c**2
    out = (g2 + cav.delta_i**2) / (g2 + delta_t**2) * (1.0 - np.asarray(eps_fb, dtype=float)) - 1.0
    return out if np.ndim(out) else float(out)


def transmission_linear(r, gamma_c, delta_at, eps_fb):
    """First-order transmission change r delta_at / gamma_c - eps_fb."""
    out = r * np.asarray(delta_at, dtype=float) / gamma_c - np.asarray(eps_fb, dtype=float)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class OpticalSystem:
    """Cavity, particle and detector bundled together with derived couplings."""

    cavity: CavityParams
    atom: AtomParams
    q: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.q <= 1.0:
            raise ValidationError(f"detector quantum efficiency q must lie in (0, 1], got {self.q}")

    @property
    def coupling(self) -> CouplingDerived:
        return derive_coupling(self.cavity, self.atom)

    @property
    def k(self):
        return self.cavity.k

    @property
    def mass(self):
        return self.atom.mass

    @property
    def eta(self):
        return cavity_scatter_fraction(self.cavity.finesse, self.cavity.k, self.cavity.waist)

    @property
    def eta_gamma_sc(self):
        return self.eta * self.atom.scatter_rate

    @property
    def zeta(self):
        return derive_coupling(self.cavity, self.atom, require_zeta=True).zeta

    @property
    def r(self):
        return resonator_slope(self.cavity.delta_i, self.cavity.gamma_c)

    @property
    def E_r(self):
        return recoil_energy(self.cavity.k, self.atom.mass)

    @property
    def recoil_velocity(self):
        return HBAR * self.cavity.k / self.atom.mass

    def to_dict(self):
        return {"cavity": asdict(self.cavity), "atom": asdict(self.atom), "q": self.q}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(CavityParams.from_dict(d["cavity"]), AtomParams.from_dict(d["atom"]), d.get("q", 1.0))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad optical system block: {exc}") from exc

    @classmethod
    def build(cls, *, wavelength, mass, eta, eta_gamma_sc, trap_depth, waist=50e-6,
              gamma_c=2 * math.pi * 10e6, r=-1.0, q=1.0):
        """Convenience constructor from operating-point quantities.

        Picks the finesse giving ``eta`` and the free-space rate giving
        ``eta_gamma_sc``; ``r = -1`` means delta_i = -gamma_c.
        """
        k = wavenumber(wavelength)
        if r == -1.0:
            delta_i = -gamma_c
        elif r == 1.0:
            delta_i = gamma_c
        elif r == 0.0:
            delta_i = 0.0
        else:
            if not -1.0 < r < 1.0:
                raise ValidationError("|r| must not exceed 1")
            # smaller-magnitude root of r d^2 - 2 g d + r g^2 = 0
            delta_i = gamma_c * (1.0 - math.sqrt(1.0 - r * r)) / r
        cav = CavityParams(finesse_for_eta(eta, k, waist), waist, k, gamma_c, delta_i)
        atom = AtomParams(mass, eta_gamma_sc / eta, trap_depth)
        return cls(cav, atom, q)
