import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twave.errors import PreconditionError
from twave.minimize2d import (Field2D, MinimizeOptions, el_residual, energy_2d, energy_gl_2d,
                              initial_field, lambda_scan, minimize_at_momentum, momentum_2d,
                              parse_lambda_grid, project_momentum, symmetry_check,
                              two_dimensionality)
from twave.nonlinearity import gross_pitaevskii

GP = gross_pitaevskii()
P1 = math.pi / 2 - 1  # momentum of the GP wave with c = 1


def _flat(nx=32, ny=8, lam=1.0):
    return Field2D(nx, ny, 10.0, lam, np.ones((nx, ny)), np.zeros((nx, ny)))


def test_constant_state_has_zero_energy_and_momentum():
    f = _flat()
    assert energy_2d(f, GP) == 0.0
    assert momentum_2d(f) == 0.0
    assert two_dimensionality(f) == 0.0


def test_y_independent_wave_energy_is_lambda_independent():
    f = initial_field(GP, P1, 1.0, "wave", nx=1024, ny=4, amplitude=0.0)
    e = energy_2d(f, GP)
    assert e == pytest.approx(2 / 3, abs=1e-3)
    for lam in (0.1, 3.0):
        assert energy_2d(f.copy(lam=lam), GP) == pytest.approx(e, rel=1e-13)
    assert energy_gl_2d(f) == pytest.approx(e, rel=1e-13)
    assert momentum_2d(f) == pytest.approx(P1, abs=1e-3)


@pytest.fixture(scope="module")
def blend64():
    return initial_field(GP, 1.0, 0.5, "blend", nx=64, ny=8)


@settings(max_examples=30, deadline=None)
@given(lam1=st.floats(0.05, 1.0), factor=st.floats(1.0, 4.0))
def test_energy_nondecreasing_in_lambda_for_fixed_field(blend64, lam1, factor):
    # lambda enters only through the nonnegative y-gradient term, weighted by lambda^2
    f = blend64
    lo, hi = energy_2d(f.copy(lam=lam1), GP), energy_2d(f.copy(lam=lam1 * factor), GP)
    assert lo <= hi


def test_projection_hits_target():
    f = initial_field(GP, 1.0, 0.5, "blend", nx=128, ny=8)
    g = project_momentum(f, 1.1, GP)
    assert momentum_2d(g) == pytest.approx(1.1, abs=1e-11)


def test_blend_at_large_lambda_returns_to_one_dimensional_wave():
    r = minimize_at_momentum(GP, 2.0, P1, "blend", nx=512, ny=8)
    assert r.converged
    assert r.energy == pytest.approx(2 / 3, abs=1e-3)
    assert r.two_dimensionality < 1e-6
    assert r.multiplier == pytest.approx(1.0, abs=1e-2)
    assert r.max_constraint_error <= 1e-8 * P1


def test_el_residual_detects_wrong_speed():
    assert el_residual(_flat(), GP, 1.0)[0] == 0.0
    r = minimize_at_momentum(GP, 2.0, P1, "wave", nx=512, ny=4)
    good = el_residual(r.field, GP, r.multiplier)[1]
    bad = el_residual(r.field, GP, 1.2 * r.multiplier)[1]
    assert bad > 10 * good


def test_symmetry_check():
    f = initial_field(GP, 1.0, 0.5, "wave", nx=128, ny=8, amplitude=0.0)
    assert symmetry_check(f)["defect"] < 1e-12
    g = initial_field(GP, 1.0, 0.5, "blend", nx=128, ny=8)
    # the blend is even about y = 0; halving the dip in one column breaks it
    assert symmetry_check(g)["defect"] < 1e-10
    rho = g.rho.copy()
    rho[:, 1] = 1.0 - 0.5 * (1.0 - rho[:, 1])
    assert symmetry_check(g.copy(rho=rho))["defect"] > 0.01


def test_init_strategies_and_errors():
    for s in ("wave", "blend", "snake"):
        f = initial_field(GP, 1.0, 0.3, s, nx=64, ny=8)
        assert f.rho.shape == (64, 8)
        assert np.all(f.rho[[0, -1]] == 1.0)
    with pytest.raises(PreconditionError):
        initial_field(GP, 1.0, 0.3, "spiral", nx=64, ny=8)
    with pytest.raises(PreconditionError):
        minimize_at_momentum(GP, 1.0, 4.0, "wave", nx=64, ny=8)


def test_parse_lambda_grid():
    assert np.allclose(parse_lambda_grid("0.1:10:geometric:3"), [0.1, 1.0, 10.0])
    assert np.allclose(parse_lambda_grid("1:2:linear:3"), [1.0, 1.5, 2.0])
    assert parse_lambda_grid("0.1:1").size == 12
    for bad in ("1:0.5:linear:3", "a:b", "0.1:1:cubic:4"):
        with pytest.raises(ValueError):
            parse_lambda_grid(bad)


def test_small_momentum_scan_finds_no_bracket():
    # near the sound speed no lambda improves on the 1D wave at these periods
    scan = lambda_scan(GP, 0.2, [0.5, 1.0, 2.0], nx=256, ny=8,
                       opts=MinimizeOptions(max_iter=3000))
    assert scan.lambda_s_bracket is None
    assert scan.status == "no reliable bracket"
    e = [x.energy for x in scan.entries]
    assert all(a <= b + 1e-8 for a, b in zip(e, e[1:]))
