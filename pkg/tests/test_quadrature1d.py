import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from twave.errors import PreconditionError, UndecidableFiniteness
from twave.nonlinearity import example43, from_potential, gross_pitaevskii
from twave.quadrature1d import (black_soliton_threshold, build_profile, first_integral_residual,
                                gp_oracle, primitive_G, turning_point, wave_integrals,
                                wave_invariants)

GP = gross_pitaevskii()


def test_turning_point_gp():
    tp = turning_point(GP, 1.0)
    assert tp.zeta == pytest.approx(0.5, abs=1e-12)
    assert tp.finite
    tp0 = turning_point(GP, 0.0)
    assert tp0.zeta == pytest.approx(0.0, abs=1e-12)
    # g(s, 0) = 2 s (1 - s)^2 has slope 2 at s = 0
    assert tp0.derivative_g == pytest.approx(2.0, rel=1e-9)
    assert tp0.finite


def test_cubic_contact_is_undecidable():
    with pytest.raises(UndecidableFiniteness, match="degenerate turning point"):
        turning_point(example43(), 1.2)


def test_supersonic_rejected():
    with pytest.raises(PreconditionError, match="supersonic"):
        turning_point(GP, 1.5)


def test_primitive_g_against_closed_form():
    c = 1.0
    ref = gp_oracle(c)
    anchor = turning_point(GP, c).anchor
    assert primitive_G(GP, c, anchor) == pytest.approx(0.0, abs=1e-14)
    for s in (0.55, 0.7, 0.9, 0.99):
        assert primitive_G(GP, c, s) == pytest.approx(ref.G(s) - ref.G(anchor), abs=1e-8)


def test_primitive_g_log_divergence_at_one():
    c = 1.0
    k = math.sqrt(2 - c * c)
    a, b = 1 - 1e-6, 1 - 1e-8
    rate = (primitive_G(GP, c, b) - primitive_G(GP, c, a)) / (-math.log(1 - b) + math.log(1 - a))
    assert rate == pytest.approx(1 / k, rel=0.02)


def test_profile_values_gp():
    prof = build_profile(GP, 1.0, x_max=12.0, n_points=4801)
    mid = prof.x.size // 2
    assert prof.x[mid] == 0.0
    assert prof.rho[mid] == pytest.approx(0.5, abs=1e-12)
    i = np.argmin(np.abs(prof.x - 2.0))
    assert prof.x[i] == pytest.approx(2.0)
    assert prof.rho[i] == pytest.approx(0.5 + 0.5 * math.tanh(1.0) ** 2, abs=1e-9)
    ref = gp_oracle(1.0).theta
    assert prof.theta[-1] - prof.theta[0] == pytest.approx(ref(12.0) - ref(-12.0), abs=1e-10)
    # full phase jump 2 arctan(sqrt(2 - c^2) / c) = pi / 2
    wide = build_profile(GP, 1.0, x_max=30.0)
    assert wide.theta[-1] - wide.theta[0] == pytest.approx(math.pi / 2, abs=1e-10)


def test_invariants_gp_c1():
    inv = wave_invariants(GP, build_profile(GP, 1.0))
    assert inv.energy == pytest.approx(2 / 3, rel=1e-10)
    assert inv.momentum_valuation == pytest.approx(math.pi / 2 - 1, rel=1e-10)
    assert inv.energy_x == pytest.approx(2 / 3, rel=1e-6)
    assert inv.to_dict()["momentum_canonical"] == pytest.approx(math.pi / 2 - 1)


def test_near_sonic_gp():
    e, p = wave_integrals(GP, 1.4)
    assert e == pytest.approx((2 / 3) * 0.04**1.5, rel=1e-8)
    assert p == pytest.approx(gp_oracle(1.4).momentum, rel=1e-8)
    assert 0 < p < 5e-3


def test_black_soliton_c0():
    e, p = wave_integrals(GP, 0.0)
    assert e == pytest.approx(4 * math.sqrt(2) / 3, rel=1e-10)
    assert p == math.pi
    prof = build_profile(GP, 0.0)
    assert np.max(np.abs(prof.rho - gp_oracle(0.0).rho(prof.x))) < 1e-9


def test_oracle_limits():
    o = gp_oracle(1e-9)
    assert o.energy == pytest.approx(4 * math.sqrt(2) / 3, rel=1e-12)
    assert o.momentum == pytest.approx(math.pi, abs=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.03, 1.38))
def test_gp_integrals_match_closed_forms(c):
    e, p = wave_integrals(GP, c)
    ref = gp_oracle(c)
    assert e == pytest.approx(ref.energy, rel=1e-9)
    assert p == pytest.approx(ref.momentum, rel=1e-9)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.05, 1.3))
def test_negative_speed_mirrors_momentum(c):
    e1, p1 = wave_integrals(GP, c)
    e2, p2 = wave_integrals(GP, -c)
    assert e1 == e2 and p1 == -p2


def test_threshold_scaled_potential():
    # V scaled by 4 on [0, 1/2], GP beyond, joined smoothly: compare with direct quadrature
    def v(s):
        s = np.asarray(s, dtype=float)
        w = np.clip((s - 0.3) / 0.4, 0, 1)
        w = w * w * (3 - 2 * w)
        return (4 * (1 - w) + w) * 0.5 * (1 - s) ** 2

    def dv(s, h=1e-6):
        return (v(s + h) - v(s - h)) / (2 * h)

    m = from_potential("scaled", v, dv)
    direct, _ = integrate.quad(lambda t: math.sqrt(float(v(t * t))), 0, 1, epsabs=1e-13, limit=200)
    assert black_soliton_threshold(m) == pytest.approx(4 * direct, rel=1e-10)
    # scaling by 4 doubles sqrt(V) where the factor is 4
    inner, _ = integrate.quad(lambda t: math.sqrt(0.5 * (1 - t * t) ** 2), 0, math.sqrt(0.3))
    scaled, _ = integrate.quad(lambda t: math.sqrt(float(v(t * t))), 0, math.sqrt(0.3))
    assert scaled == pytest.approx(2 * inner, rel=1e-12)


def test_first_integral_cubic_contact_model_away_from_c0():
    m = example43()
    for c in (0.6, 1.0, 1.35):
        assert first_integral_residual(m, build_profile(m, c)) < 1e-6
