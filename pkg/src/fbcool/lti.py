"""Real-coefficient rational transfer functions in the Laplace variable s.

Coefficients are stored in ascending order of degree, so ``num=(0, 1)`` is
``H(s) = s`` and ``den=(1, 0.8)`` is ``1 + 0.8 s``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PoleOnAxisError, ValidationError

__all__ = [
    "RationalTransferFunction",
    "FrequencyResponse",
    "StabilityReport",
    "evaluate",
    "reference_loop",
    "is_closed_loop_stable",
    "REFERENCE_TAGS",
]


def _trim(coeffs) -> tuple[float, ...]:
    c = [float(x) for x in coeffs]
    while len(c) > 1 and c[-1] == 0.0:
        c.pop()
    return tuple(c) if c else (0.0,)


def _horner(coeffs, s):
    acc = 0.0
    for a in reversed(coeffs):
        acc = acc * s + a
    return acc


@dataclass(frozen=True)
class RationalTransferFunction:
    num: tuple[float, ...]
    den: tuple[float, ...] = (1.0,)
    label: str = ""

    def __post_init__(self):
        num = _trim(self.num)
        den = _trim(self.den)
        if not all(math.isfinite(a) for a in num + den):
            raise ValidationError("transfer-function coefficients must be finite")
        if den == (0.0,):
            raise ValidationError("denominator polynomial is identically zero")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def num_degree(self) -> int:
        return 0 if self.num == (0.0,) else len(self.num) - 1

    @property
    def den_degree(self) -> int:
        return len(self.den) - 1

    @property
    def relative_degree(self) -> int:
        """deg(den) - deg(num); negative for improper loops such as H(s) = s."""
        return self.den_degree - self.num_degree

    @property
    def is_proper(self) -> bool:
        return self.relative_degree >= 0

    @property
    def is_zero(self) -> bool:
        return self.num == (0.0,)

    def __call__(self, s):
        """Evaluate H at complex s (scalar or array) without pole checks."""
        s = np.asarray(s, dtype=complex)
        return _horner(self.num, s) / _horner(self.den, s)

    def __mul__(self, other: RationalTransferFunction) -> RationalTransferFunction:
        num = np.polynomial.polynomial.polymul(self.num, other.num)
        den = np.polynomial.polynomial.polymul(self.den, other.den)
        label = "*".join(x for x in (self.label, other.label) if x)
        return RationalTransferFunction(tuple(num), tuple(den), label)

    def scaled(self, omega0: float, label: str | None = None) -> RationalTransferFunction:
        """Return H(s / omega0).

        Turns a loop written in a normalized frequency variable into one in
        rad/s; e.g. the reference loops use ``omega0 = 2 k u``.
        """
        if not omega0 > 0:
            raise ValidationError("omega0 must be positive")
        num = tuple(a / omega0**j for j, a in enumerate(self.num))
        den = tuple(b / omega0**j for j, b in enumerate(self.den))
        return RationalTransferFunction(num, den, self.label if label is None else label)

    def characteristic_polynomial(self) -> np.ndarray:
        """Ascending coefficients of den(s) + num(s), the zeros of 1 + H."""
        n = max(len(self.num), len(self.den))
        out = np.zeros(n)
        out[: len(self.den)] += self.den
        out[: len(self.num)] += self.num
        return out

    def to_dict(self) -> dict:
        return {"label": self.label, "num": list(self.num), "den": list(self.den)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> RationalTransferFunction:
        try:
            return cls(tuple(d["num"]), tuple(d.get("den", (1.0,))), str(d.get("label", "")))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad loop definition: {d!r}") from exc

    @classmethod
    def from_json(cls, text: str) -> RationalTransferFunction:
        return cls.from_dict(json.loads(text))

    @classmethod
    def constant(cls, gain: float, label: str = "") -> RationalTransferFunction:
        return cls((gain,), (1.0,), label)


@dataclass(frozen=True)
class FrequencyResponse:
    omega: np.ndarray | float
    h1: np.ndarray | float
    h2: np.ndarray | float
    closed_loop_mag_sq: np.ndarray | float

    @property
    def h(self):
        return self.h1 + 1j * self.h2

    @property
    def mag_sq(self):
        """|H(i omega)|^2."""
        return self.h1**2 + self.h2**2


def evaluate(H: RationalTransferFunction, omega) -> FrequencyResponse:
    """Frequency response H(i omega) = h1 + i h2 and |1 + H|^2.

    Accepts a scalar or an array of angular frequencies. Raises
    PoleOnAxisError instead of returning inf when omega hits a pole.
    """
    scalar = np.ndim(omega) == 0
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    s = 1j * w
    den = _horner(H.den, s)
    scale = _horner(np.abs(H.den), np.abs(w))
    bad = np.abs(den) <= 1e-14 * scale
    if np.any(bad):
        raise PoleOnAxisError(f"loop {H.label or H.den!r} has a pole at omega={w[bad][0]!r}")
    h = _horner(H.num, s) / den
    h1, h2 = h.real.copy(), h.imag.copy()
    cl = (1.0 + h1) ** 2 + h2**2
    if scalar:
        return FrequencyResponse(float(w[0]), float(h1[0]), float(h2[0]), float(cl[0]))
    return FrequencyResponse(w, h1, h2, cl)


REFERENCE_TAGS = ("a", "b", "c", "d")

_REFERENCE = {
    # normalized variable s = i v / u, i.e. s_phys / (2 k u)
    "a": ((0.0, 1.0), (1.0,), "differentiator s"),
    "b": ((0.0, 1.0, 0.1), (1.0, 0.8), "s(1+s/10)/(1+8s/10)"),
    "c": ((0.0, 1.0, 0.11, 0.001), (1.0, 0.85, 0.04), "s(1+s/10)(1+s/100)/((1+8s/10)(1+s/20))"),
    "d": ((0.0, 1.0, 0.5), (1.0,), "Doppler-like s(1+s/2)"),
}


def reference_loop(tag: str) -> RationalTransferFunction:
    """One of the four normalized loop gains of the force-versus-velocity family."""
    try:
        num, den, label = _REFERENCE[tag]
    except KeyError:
        raise ValidationError(f"unknown loop tag {tag!r}; expected one of {REFERENCE_TAGS}") from None
    return RationalTransferFunction(num, den, f"{tag}: {label}")


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    poles: np.ndarray
    marginal: bool = False
    warnings: tuple[str, ...] = field(default=())

    def __bool__(self):
        return self.stable

    @property
    def offending_poles(self) -> np.ndarray:
        return self.poles[self.poles.real >= -self.tolerance] if self.poles.size else self.poles

    @property
    def tolerance(self) -> float:
        return 1e-9 * (1.0 + (np.max(np.abs(self.poles)) if self.poles.size else 0.0))


def is_closed_loop_stable(H: RationalTransferFunction) -> StabilityReport:
    """Decide stability of the loop from the zeros of den(s) + num(s).

    Stable iff every closed-loop pole has real part below
    ``-1e-9 * (1 + max|pole|)``; poles inside that band are reported as
    marginal and count as not stable. A negative DC value of 1 + H (positive
    feedback at DC) adds a warning even when there are no poles.
    """
    char = H.characteristic_polynomial()
    trimmed = np.trim_zeros(char, "b")
    if trimmed.size == 0 or not np.any(trimmed):
        raise ValidationError("characteristic polynomial 1 + H is identically zero")
    if trimmed.size == 1:
        poles = np.zeros(0, dtype=complex)
    else:
        # companion-matrix eigenvalues
        poles = np.roots(trimmed[::-1]).astype(complex)
    tol = 1e-9 * (1.0 + (np.max(np.abs(poles)) if poles.size else 0.0))
    marginal = bool(np.any(np.abs(poles.real) <= tol))
    stable = bool(np.all(poles.real < -tol))
    warnings = []
    if H.den[0] != 0.0 and char[0] / H.den[0] < 0:
        warnings.append("1 + H(0) < 0: positive feedback at DC")
    if marginal:
        warnings.append("closed-loop pole on the imaginary axis (marginal)")
    return StabilityReport(stable, np.sort_complex(poles), marginal, tuple(warnings))
