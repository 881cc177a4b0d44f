"""State-space realization and exact discretization of loop filters."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from ..errors import ImproperLoopError, NumericalError, ValidationError
from ..lti import RationalTransferFunction

__all__ = ["StateSpaceFilter", "DiscreteLoopFilter", "realize", "rolled_off"]


@dataclass
class StateSpaceFilter:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    state: np.ndarray
    source: RationalTransferFunction | None = None

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def response(self, omega):
        """C (i omega I - A)^-1 B + D."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        n = self.order
        if n == 0:
            return np.full(omega.shape, self.D, dtype=complex)
        eye = np.eye(n)
        out = np.empty(omega.shape, dtype=complex)
        for i, w in enumerate(omega):
            out[i] = self.C @ np.linalg.solve(1j * w * eye - self.A, self.B) + self.D
        return out

    def poles(self):
        return np.linalg.eigvals(self.A) if self.order else np.zeros(0, dtype=complex)

    def discretize(self, dt: float, hold: str = "foh") -> DiscreteLoopFilter:
        return DiscreteLoopFilter.from_continuous(self, dt, hold)


def rolled_off(H: RationalTransferFunction, rolloff_omega: float | None) -> RationalTransferFunction:
    """Compose H with one first-order low-pass 1/(1 + s/w_r) per missing degree."""
    extra = -H.relative_degree
    if extra <= 0:
        return H
    if rolloff_omega is None:
        raise ImproperLoopError(
            f"loop {H.label or 'H'} is improper by {extra}; a roll-off frequency is required")
    if not rolloff_omega > 0:
        raise ValidationError("roll-off frequency must be positive")
    lp = RationalTransferFunction((1.0,), (1.0, 1.0 / rolloff_omega))
    out = H
    for _ in range(extra):
        out = out * lp
    return RationalTransferFunction(out.num, out.den, f"{H.label} | rolloff {rolloff_omega:.6g}")


def realize(H: RationalTransferFunction, rolloff_omega: float | None = None,
            check_points: int = 20, rtol: float = 1e-8) -> StateSpaceFilter:
    """Controllable canonical realization of H (rolled off if improper).

    The polynomial is first rescaled to unit geometric pole magnitude so the
    companion matrix stays well conditioned for loops written in rad/s.
    """
    G = rolled_off(H, rolloff_omega)
    den = np.array(G.den)
    num = np.zeros_like(den)
    num[: len(G.num)] = G.num
    n = len(den) - 1
    if n == 0:
        return StateSpaceFilter(np.zeros((0, 0)), np.zeros(0), np.zeros(0), float(num[0] / den[0]),
                                np.zeros(0), G)
    a = den / den[n]
    b = num / den[n]
    # frequency scale w_s: realize G(w_s * sigma) then map back
    w_s = abs(a[0]) ** (1.0 / n) if a[0] != 0 else max(abs(a[:n]).max(), 1.0) ** (1.0 / n)
    scale = w_s ** np.arange(n + 1)
    a_s = a * scale / scale[n]
    b_s = b * scale / scale[n]
    d = b_s[n]
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -a_s[:n]
    B = np.zeros(n)
    B[-1] = 1.0
    C = b_s[:n] - d * a_s[:n]
    sys = StateSpaceFilter(w_s * A, w_s * B, C, float(d), np.zeros(n), G)
    _check_response(sys, G, check_points, rtol)
    return sys


def _check_response(sys, G, points, rtol):
    poles = np.abs(sys.poles())
    poles = poles[poles > 0]
    lo, hi = (poles.min(), poles.max()) if poles.size else (1.0, 1.0)
    omegas = np.geomspace(lo / 100.0, hi * 100.0, points)
    want = G(1j * omegas)
    got = sys.response(omegas)
    err = np.abs(got - want) / np.maximum(np.abs(want), 1e-300)
    if np.max(err) > rtol:
        raise NumericalError(f"realization mismatch {np.max(err):.3g} exceeds {rtol:g}")


@dataclass
class DiscreteLoopFilter:
    """Exact sampled filter: x[n+1] = Phi x[n] + G y[n], out[n] = C x[n] + Dt y[n].

    ``hold="zoh"`` treats the input as piecewise constant; ``"foh"`` as
    piecewise linear between samples, which removes the half-sample delay of
    the zero-order hold. The FOH feed-through term is folded into ``Dt``.
    """

    Phi: np.ndarray
    G: np.ndarray
    C: np.ndarray
    Dt: float
    dt: float
    hold: str

    @classmethod
    def from_continuous(cls, sys: StateSpaceFilter, dt: float, hold: str = "foh"):
        if hold not in ("zoh", "foh"):
            raise ValidationError(f"unknown hold {hold!r}")
        n = sys.order
        if n == 0:
            return cls(np.zeros((0, 0)), np.zeros(0), np.zeros(0), sys.D, dt, hold)
        M = np.zeros((n + 2, n + 2))
        M[:n, :n] = sys.A
        M[:n, n] = sys.B
        M[n, n + 1] = 1.0
        E = expm(M * dt)
        Phi = E[:n, :n]
        g1 = E[:n, n]
        g2 = E[:n, n + 1] / dt
        if hold == "zoh":
            return cls(Phi, g1, sys.C.copy(), sys.D, dt, hold)
        return cls(Phi, g1 - g2 + Phi @ g2, sys.C.copy(), sys.D + float(sys.C @ g2), dt, hold)

    @property
    def order(self):
        return self.Phi.shape[0]
