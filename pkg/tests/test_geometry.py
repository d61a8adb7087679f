import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from periodfn.errors import QuadratureNonConverged, TrivialAction
from periodfn.flow import Domain
from periodfn.gallery import gallery_get, hamiltonian_period
from periodfn.geometry import (CyclicActionSample, dress_bound_check, hoffman_mann_check,
                               orbit_geometry, orbit_geometry_batch, rotation_generator,
                               sampled_diameter)
from periodfn.grid import disk_region, make_grid


@pytest.mark.parametrize("beta,r", [(1.0, 0.5), (3.0, 1.7), (2 * math.pi, 0.2)])
def test_circle_orbit_exact(beta, r):
    e = gallery_get("rotation", {"beta": beta})
    g = orbit_geometry(e.flow, [r, 0.0], period=2 * math.pi / beta)
    assert g.length == pytest.approx(2 * math.pi * r, rel=1e-10)
    assert g.diameter == pytest.approx(2 * r, rel=1e-10)
    assert g.sup_speed == pytest.approx(beta * r, rel=1e-12)
    # the speed bound is sharp for constant speed; l - 2 diam = (2 pi - 4) r
    assert abs(g.slack_speed) < 1e-9
    assert g.slack_diameter == pytest.approx((2 * math.pi - 4) * r, rel=1e-9)


def test_helix_on_the_solid_torus():
    e = gallery_get("seifert", {"k": 3})
    r = 0.6
    g = orbit_geometry(e.flow, [r, 0.0, 0.2], period=3.0)
    speed = math.hypot(2 * math.pi * r / 3, 1.0)
    assert g.length == pytest.approx(3 * speed, rel=1e-10)
    # opposite disk points are half a turn apart in tau
    assert g.diameter == pytest.approx(math.sqrt(4 * r * r + 0.25), rel=1e-6)
    assert g.holds()


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 1.2), st.floats(0, 2 * math.pi))
def test_length_inequalities_quartic_oscillator(r, ang):
    e = gallery_get("hamiltonian_even", {"b": 2})
    x = [r * math.cos(ang), r * math.sin(ang)]
    per = hamiltonian_period(x, 2)[0]
    g = orbit_geometry(e.flow, x, quad_n=256, quad_tol=1e-5, period=per)
    assert g.slack_diameter >= -1e-9
    assert g.slack_speed >= -1e-9


def test_coarse_quadrature_is_rejected():
    e = gallery_get("hamiltonian_even", {"b": 2})
    with pytest.raises(QuadratureNonConverged):
        orbit_geometry(e.flow, [1.0, 0.0], quad_n=8, quad_tol=1e-12, detector=e.detector)


def test_batch_requires_periods():
    e = gallery_get("rotation")
    with pytest.raises(ValueError):
        orbit_geometry_batch(e.flow, [[1.0, 0.0]], [np.nan])


def test_sampled_diameter_on_circle_factor():
    dom = Domain((0.0,), (1.0,), (True,))
    P = np.array([[0.05], [0.95], [0.5]])
    assert sampled_diameter(dom, P) == pytest.approx(0.45)


def _disk_action(p, q=1):
    ax = np.round(np.arange(-1, 1.0001, 0.05), 12)
    grid = make_grid(Domain.euclidean(2), axes=[ax, ax], region=disk_region(1.0))
    return CyclicActionSample.from_grid(grid, rotation_generator(p, q), p)


@pytest.mark.parametrize("p,q", [(2, 1), (3, 1), (5, 2), (7, 3)])
def test_dress_bound_for_rotations(p, q):
    act = _disk_action(p, q)
    assert act.order_defect() < 1e-12
    res = dress_bound_check(act)
    assert res.holds
    assert res.D == pytest.approx(1.0, abs=0.06)
    assert res.C >= 2 * math.sin(math.pi / p) - 0.05


def test_identity_action_is_trivial():
    act = _disk_action(3)
    act.generator = lambda X: np.array(X, dtype=float)
    with pytest.raises(TrivialAction):
        dress_bound_check(act)


@pytest.mark.parametrize("p", [2, 3, 5, 11])
def test_displacement_near_fixed_point_interior(p):
    act = CyclicActionSample(rotation_generator(p), p, np.zeros((1, 2)), np.ones(1, bool))
    res = hoffman_mann_check(act, [0.0, 0.0], 0.4)
    assert res.holds
    # best power moves a point at radius r by at least sqrt(3) r
    assert res.ratio <= 1 / math.sqrt(3) + 1e-9


def test_displacement_near_fixed_point_on_boundary():
    # rotation about the normal axis of the half-space x3 >= 0
    act = CyclicActionSample(rotation_generator(4), 4, np.zeros((1, 3)), np.ones(1, bool))
    res = hoffman_mann_check(act, [0.0, 0.0, 0.0], 0.3, interior=False, boundary_coord=2)
    assert res.holds and res.constant == 4.0
    assert res.face in ("curved", "flat")


def test_fixed_point_must_be_fixed():
    act = CyclicActionSample(rotation_generator(3), 3, np.zeros((1, 2)), np.ones(1, bool))
    with pytest.raises(ValueError):
        hoffman_mann_check(act, [0.5, 0.0], 0.1)
