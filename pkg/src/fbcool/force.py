"""Closed-loop intensity response and the velocity-dependent feedback force.

Sign convention: the force is along +x for an atom moving along +x, so
``f * v < 0`` means cooling. Results hold to lowest order in U0 / (m v^2 / 2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constants import HBAR
from .errors import UnstableLoopError, ValidationError
from .lti import RationalTransferFunction, evaluate, is_closed_loop_stable

__all__ = [
    "Quadratures",
    "ForceCurve",
    "steady_state_quadratures",
    "feedback_force",
    "force_differentiator",
    "force_curve",
    "friction_coefficient",
    "require_stable",
]


def require_stable(H: RationalTransferFunction, allow_unstable: bool = False):
    if allow_unstable:
        return
    report = is_closed_loop_stable(H)
    if not report.stable:
        raise UnstableLoopError(
            f"closed loop for {H.label or 'H'} is not stable; poles {report.offending_poles}",
            report.offending_poles,
        )


@dataclass(frozen=True)
class Quadratures:
    a_cos: np.ndarray | float
    a_sin: np.ndarray | float


def steady_state_quadratures(H, r, zeta, k, v, allow_unstable=False) -> Quadratures:
    """Amplitudes of cos(2kvt) and sin(2kvt) in the closed-loop signal."""
    require_stable(H, allow_unstable)
    resp = evaluate(H, 2.0 * k * np.asarray(v, dtype=float))
    scale = r * zeta / resp.closed_loop_mag_sq
    return Quadratures(scale * (1.0 + resp.h1), scale * resp.h2)


def feedback_force(H, r, eta, gamma_sc, k, v, allow_unstable=False):
    """Cycle-averaged force hbar k eta Gamma_sc r H2 / |1 + H|^2 at Doppler frequency 2kv.

    ``H`` is the physical loop gain with s in rad/s.
    """
    require_stable(H, allow_unstable)
    resp = evaluate(H, 2.0 * k * np.asarray(v, dtype=float))
    return HBAR * k * eta * gamma_sc * r * resp.h2 / resp.closed_loop_mag_sq


def force_differentiator(eta, gamma_sc, k, u, v):
    """Closed form for the differentiator loop H = s / (2ku) at r = -1."""
    if not u > 0:
        raise ValidationError("unity-gain velocity u must be positive")
    v = np.asarray(v, dtype=float)
    out = -HBAR * k * eta * gamma_sc * u * v / (u**2 + v**2)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ForceCurve:
    velocities: np.ndarray
    forces: np.ndarray
    loop: str
    normalized: bool
    normalization: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.velocities, dtype=float)
        f = np.asarray(self.forces, dtype=float)
        if v.shape != f.shape or v.ndim != 1:
            raise ValidationError("velocities and forces must be matching 1-D arrays")
        if v.size > 1 and np.any(np.diff(v) <= 0):
            raise ValidationError("velocity grid must be strictly increasing")
        if not np.all(np.isfinite(f)):
            raise ValidationError("force curve contains non-finite values")
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "forces", f)

    def rows(self):
        for v, f in zip(self.velocities, self.forces):
            yield (float(v), float(f), self.loop, self.normalized)


def force_curve(H_norm, r, eta, gamma_sc, k, u, v_grid, normalized=False,
                allow_unstable=False) -> ForceCurve:
    """Sample the force over a velocity grid.

    ``H_norm`` is written in the normalized variable s / (2ku) = i v / u, as in
    the reference loop family. With ``normalized=True`` the curve is f / (hbar k eta
    Gamma_sc) against v / u and ``v_grid`` is read in units of u.
    """
    if not u > 0:
        raise ValidationError("u must be positive")
    require_stable(H_norm, allow_unstable)
    grid = np.asarray(v_grid, dtype=float)
    if not np.all(np.isfinite(grid)):
        raise ValidationError("velocity grid must be finite")
    v = grid * u if normalized else grid
    H = H_norm.scaled(2.0 * k * u)
    f = feedback_force(H, r, eta, gamma_sc, k, v, allow_unstable=True)
    if normalized:
        f = f / (HBAR * k * eta * gamma_sc)
    return ForceCurve(grid, np.atleast_1d(f), H_norm.label, normalized,
                      {"u": u, "eta_gamma_sc": eta * gamma_sc, "k": k, "r": r})


def _velocity_scale(H, k):
    roots = np.roots(H.characteristic_polynomial()[::-1])
    roots = roots[np.abs(roots) > 0]
    if roots.size == 0:
        return 1.0 / (2.0 * k)
    return float(np.min(np.abs(roots))) / (2.0 * k)


def friction_coefficient(H, r, eta, gamma_sc, k, v_scale=None, allow_unstable=False):
    """Low-velocity slope df/dv at v = 0.

    Central differences with step 1e-4 * v_scale, improved by one Richardson
    level. ``v_scale`` defaults to the slowest closed-loop pole divided by 2k,
    which is u for the differentiator.
    """
    require_stable(H, allow_unstable)
    h = 1e-4 * (v_scale if v_scale is not None else _velocity_scale(H, k))

    def central(step):
        fp, fm = feedback_force(H, r, eta, gamma_sc, k, np.array([step, -step]), allow_unstable=True)
        return (fp - fm) / (2.0 * step)

    d1, d2 = central(h), central(h / 2.0)
    slope = (4.0 * d2 - d1) / 3.0
    if not np.isfinite(slope):
        raise ValidationError("force is not differentiable at v = 0 for this loop")
    return float(slope)
