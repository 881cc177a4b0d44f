import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbcool.constants import HBAR
from fbcool.errors import UnstableLoopError, ValidationError
from fbcool.force import (feedback_force, force_curve, force_differentiator, friction_coefficient,
                          steady_state_quadratures)
from fbcool.lti import RationalTransferFunction, evaluate, reference_loop

from .conftest import random_stable_loop

K = 2 * math.pi / 852e-9
U = 7e-3
ETA, GSC = 0.8, 500.0
SCALE = HBAR * K * ETA * GSC
ZERO = RationalTransferFunction((0.0,))


def diff_loop(u=U):
    return reference_loop("a").scaled(2 * K * u)


def test_open_loop_quadratures():
    q = steady_state_quadratures(ZERO, -1.0, 0.3, K, 0.01)
    assert q.a_cos == pytest.approx(-0.3) and q.a_sin == 0.0


def test_no_doppler_no_quadrature():
    q = steady_state_quadratures(reference_loop("b").scaled(2 * K * U), -1.0, 0.3, K, 0.0)
    assert q.a_sin == 0.0


def test_differentiator_quadratures_at_unity_gain():
    zeta = 0.4
    q = steady_state_quadratures(diff_loop(), -1.0, zeta, K, U)
    assert q.a_cos == pytest.approx(-zeta / 2, rel=1e-13)
    assert q.a_sin == pytest.approx(-zeta / 2, rel=1e-13)


def test_force_zero_without_quadrature_gain():
    assert feedback_force(RationalTransferFunction.constant(3.0), -1.0, ETA, GSC, K, 0.02) == 0.0


def test_force_differentiator_at_u():
    f = feedback_force(diff_loop(), -1.0, ETA, GSC, K, U)
    assert f == pytest.approx(-SCALE / 2, rel=1e-13)
    assert force_differentiator(ETA, GSC, K, U, U) == pytest.approx(-SCALE / 2, rel=1e-15)


def test_loop_d_closed_form():
    nu = np.linspace(0.0, 10, 101)
    f = feedback_force(reference_loop("d").scaled(2 * K * U), -1.0, ETA, GSC, K, nu * U)
    np.testing.assert_allclose(f, -SCALE * nu / (1 + nu**4 / 4), rtol=1e-12, atol=1e-40)


def test_differentiator_closed_form_properties():
    assert force_differentiator(ETA, GSC, K, U, 0.0) == 0.0
    v = 1e4 * U
    assert abs(force_differentiator(ETA, GSC, K, U, v)) == pytest.approx(SCALE * U / v, rel=1e-7)
    with pytest.raises(ValidationError):
        force_differentiator(ETA, GSC, K, 0.0, 1.0)


def test_curve_loop_a_matches_closed_form():
    c = force_curve(reference_loop("a"), -1.0, ETA, GSC, K, U, np.array([0.0, U, 2 * U]))
    want = force_differentiator(ETA, GSC, K, U, c.velocities)
    np.testing.assert_allclose(c.forces, want, rtol=1e-12, atol=0)


def test_curve_normalized_axes():
    c = force_curve(reference_loop("a"), -1.0, ETA, GSC, K, U, np.array([0.0, 1.0, 2.0]), normalized=True)
    np.testing.assert_allclose(c.forces, [0.0, -0.5, -0.4], rtol=1e-13)
    assert c.normalized and c.normalization["u"] == U


def test_curve_rejects_bad_grid_and_unstable_loop():
    with pytest.raises(ValidationError):
        force_curve(reference_loop("a"), -1.0, ETA, GSC, K, U, np.array([0.0, 2.0, 1.0]))
    unstable = RationalTransferFunction((-2.0,), (1.0, 1.0))
    with pytest.raises(UnstableLoopError):
        force_curve(unstable, -1.0, ETA, GSC, K, U, np.array([0.0, 1.0]))
    c = force_curve(unstable, -1.0, ETA, GSC, K, U, np.array([0.5, 1.0]), allow_unstable=True)
    assert c.forces.size == 2


def test_capture_range_and_common_friction():
    grid = np.linspace(0, 40, 4001)
    curves = {t: force_curve(reference_loop(t), -1.0, 1.0, 1.0, 0.5, 1.0, grid, normalized=True)
              for t in "abc"}
    far = grid >= 10
    assert np.all(np.abs(curves["c"].forces[far]) > np.abs(curves["a"].forces[far]))
    assert abs(curves["c"].forces[grid == 30][0]) > abs(curves["a"].forces[grid == 30][0])
    slopes = [friction_coefficient(reference_loop(t).scaled(2 * K * U), -1.0, ETA, GSC, K) for t in "abc"]
    for s in slopes[1:]:
        assert s == pytest.approx(slopes[0], rel=1e-6)


def test_friction_coefficient_values():
    alpha = friction_coefficient(diff_loop(), -1.0, ETA, GSC, K)
    assert alpha == pytest.approx(-SCALE / U, rel=1e-8)
    assert friction_coefficient(ZERO, -1.0, ETA, GSC, K) == 0.0
    halved = friction_coefficient(diff_loop(U / 2), -1.0, ETA, GSC, K)
    assert halved / alpha == pytest.approx(2.0, rel=1e-8)


def test_friction_matches_finite_difference_oracle():
    # brute-force oracle: fine forward differences on the closed form
    h = 1e-7 * U
    fd = (force_differentiator(ETA, GSC, K, U, h) - 0.0) / h
    assert friction_coefficient(diff_loop(), -1.0, ETA, GSC, K) == pytest.approx(fd, rel=1e-6)


def test_random_loops_odd_and_quadrature_identity(rng):
    v = np.linspace(-3, 3, 61) * U
    for _ in range(50):
        H = random_stable_loop(rng).scaled(2 * K * U)
        f = feedback_force(H, -1.0, ETA, GSC, K, v)
        np.testing.assert_allclose(f[::-1], -f, rtol=1e-12, atol=1e-40)
        zeta = rng.uniform(-2, 2)
        q = steady_state_quadratures(H, -1.0, zeta, K, v)
        cl = evaluate(H, 2 * K * v).closed_loop_mag_sq
        np.testing.assert_allclose(q.a_cos**2 + q.a_sin**2, zeta**2 / cl, rtol=1e-10)


@settings(max_examples=100, deadline=None)
@given(r=st.floats(-1, 1).filter(lambda x: abs(x) > 1e-3), seed=st.integers(0, 10**6))
def test_cooling_sign_rule(r, seed):
    H = random_stable_loop(np.random.default_rng(seed)).scaled(2 * K * U)
    v = np.linspace(0.05, 5, 40) * U
    f = feedback_force(H, r, ETA, GSC, K, v)
    h2 = evaluate(H, 2 * K * v).h2
    np.testing.assert_array_equal(f * v < 0, r * h2 < 0)


def test_work_rate_consistency():
    # time average over one Doppler period of eps(t) f_u(t) v
    U0 = -3e-30
    zeta = HBAR * ETA * GSC / U0
    for tag in "abcd":
        H = reference_loop(tag).scaled(2 * K * U)
        for v in (0.3 * U, U, 4 * U):
            q = steady_state_quadratures(H, -1.0, zeta, K, v)
            w = 2 * K * v
            t = np.linspace(0, 2 * math.pi / w, 4097)[:-1]
            eps = q.a_cos * np.cos(w * t) + q.a_sin * np.sin(w * t)
            power = np.mean(eps * 2 * K * U0 * np.sin(w * t) * v)
            f = feedback_force(H, -1.0, ETA, GSC, K, v)
            assert power == pytest.approx(f * v, rel=1e-10)


def test_doppler_mimic_loop():
    gamma_p = 2 * math.pi * 3e5
    H = RationalTransferFunction((0.0, 1.0 / gamma_p, 1.0 / (2 * gamma_p**2)))
    u = gamma_p / (2 * K)
    v = np.linspace(0, 8, 81) * u
    f = feedback_force(H, -1.0, ETA, GSC, K, v)
    d = force_curve(reference_loop("d"), -1.0, ETA, GSC, K, u, v)
    np.testing.assert_allclose(f, d.forces, rtol=1e-12, atol=1e-40)
    nu = v / u
    np.testing.assert_allclose(f / SCALE, -nu / (1 + nu**4 / 4), rtol=1e-12, atol=1e-20)
