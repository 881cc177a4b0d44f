import math

import numpy as np
import pytest

from fbcool.constants import EPS0, HBAR
from fbcool.errors import ValidationError
from fbcool.optics import (AtomParams, CavityParams, OpticalSystem, derive_coupling,
                           finesse_for_eta, free_space_solid_angle, from_polarizability,
                           recoil_energy, resonator_slope, transmission_exact,
                           transmission_linear, wavenumber)

K = wavenumber(780e-9)
W = 40e-6
GC = 2 * math.pi * 5e6


def cavity(delta_i=-GC, finesse=2e4):
    return CavityParams(finesse, W, K, GC, delta_i)


ATOM = AtomParams(mass=1.44e-25, scatter_rate=300.0, trap_depth=-2e-30)


def test_slope_at_minus_linewidth():
    assert derive_coupling(cavity(-GC), ATOM).r == pytest.approx(-1.0, abs=1e-15)


def test_slope_at_zero_detuning():
    assert derive_coupling(cavity(0.0), ATOM).r == 0.0


def test_eta_inversion_gives_unity():
    F = math.pi * K**2 * W**2 / 6
    c = derive_coupling(CavityParams(F, W, K, GC, -GC), ATOM)
    assert c.eta == pytest.approx(1.0, rel=1e-14)
    assert finesse_for_eta(1.0, K, W) == pytest.approx(F, rel=1e-15)


def test_derived_quantities():
    c = derive_coupling(cavity(), ATOM)
    eta = 6 * 2e4 / (math.pi * K**2 * W**2)
    assert c.eta == pytest.approx(eta, rel=1e-15)
    assert c.zeta == pytest.approx(HBAR * eta * 300.0 / -2e-30, rel=1e-15)
    assert c.zeta < 0  # carries the sign of U0
    assert c.E_r == pytest.approx(HBAR**2 * K**2 / (2 * 1.44e-25), rel=1e-15)
    assert c.delta_omega_fs / c.eta == pytest.approx(math.pi / (2 * 2e4), rel=1e-14)
    assert c.delta_omega_fs == pytest.approx(free_space_solid_angle(K, W))


def test_zeta_absent_for_zero_depth():
    atom = AtomParams(1e-25, 10.0, 0.0)
    assert derive_coupling(cavity(), atom).zeta is None
    with pytest.raises(ValidationError):
        derive_coupling(cavity(), atom, require_zeta=True)


def test_slope_is_odd_and_peaks_at_linewidth():
    d = np.linspace(-5, 5, 100001) * GC
    r = resonator_slope(d, GC)
    np.testing.assert_allclose(resonator_slope(-d, GC), -r, atol=1e-15)
    assert np.max(np.abs(r)) <= 1.0
    peak = abs(d[np.argmax(r)]) / GC
    assert peak == pytest.approx(1.0, abs=1e-3)


def test_polarizability_zero():
    assert from_polarizability(0.0, 1e5, K) == (0.0, 0.0)


def test_polarizability_field_scaling_and_sign():
    a = 1e-39
    g1, u1 = from_polarizability(a, 1e4, K)
    g2, u2 = from_polarizability(a, 2e4, K)
    assert g2 / g1 == pytest.approx(4.0) and u2 / u1 == pytest.approx(4.0)
    assert u1 < 0
    assert g1 == pytest.approx(K**3 * (a * 1e4) ** 2 / (6 * math.pi * EPS0 * HBAR), rel=1e-14)
    with pytest.raises(ValidationError):
        from_polarizability(float("inf"), 1.0, K)


def test_exact_transmission_values():
    cav = cavity()
    assert transmission_exact(cav, 0.0, 0.0) == 0.0
    assert transmission_exact(cav, 0.0, 0.03) == pytest.approx(-0.03, abs=1e-16)
    assert transmission_exact(cav, GC, 0.0) == pytest.approx(-3 / 5, rel=1e-14)


def test_linear_transmission_values():
    assert transmission_linear(-1.0, GC, 0.0, 0.0) == 0.0
    assert transmission_linear(-1.0, GC, 0.01 * GC, 0.0) == pytest.approx(-0.01, rel=1e-14)


def test_linearization_remainder_bound():
    cav = cavity()
    x = np.linspace(-0.01, 0.01, 2001)
    exact = transmission_exact(cav, x * GC, 0.0)
    lin = transmission_linear(-1.0, GC, x * GC, 0.0)
    assert np.all(np.abs(exact - lin) <= 2 * x**2 + 1e-16)


def test_linearization_is_first_order():
    cav = cavity()
    xs = np.array([1e-2, 1e-3, 1e-4])
    resid = transmission_exact(cav, xs * GC, 0.0) - transmission_linear(-1.0, GC, xs * GC, 0.0)
    ratio = resid / xs
    assert abs(ratio[-1]) < abs(ratio[0]) / 50
    curvature = resid / xs**2
    assert np.all(np.isfinite(curvature)) and np.ptp(curvature) < 0.1


def test_parameter_validation():
    with pytest.raises(ValidationError):
        CavityParams(-1.0, W, K, GC)
    with pytest.raises(ValidationError):
        AtomParams(0.0, 1.0, 1.0)
    with pytest.raises(ValidationError):
        OpticalSystem(cavity(), ATOM, q=0.0)


def test_optical_system_build_and_round_trip():
    s = OpticalSystem.build(wavelength=852e-9, mass=2.2e-25, eta=0.5, eta_gamma_sc=1e3,
                            trap_depth=1e-31, q=0.8)
    assert s.eta == pytest.approx(0.5, rel=1e-13)
    assert s.eta_gamma_sc == pytest.approx(1e3, rel=1e-13)
    assert s.r == pytest.approx(-1.0)
    assert s.E_r == pytest.approx(recoil_energy(s.k, 2.2e-25))
    assert OpticalSystem.from_dict(s.to_dict()) == s
    half = OpticalSystem.build(wavelength=852e-9, mass=2.2e-25, eta=0.5, eta_gamma_sc=1e3,
                               trap_depth=1e-31, r=-0.6)
    assert half.r == pytest.approx(-0.6, rel=1e-12)
