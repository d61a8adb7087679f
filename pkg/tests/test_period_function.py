import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from periodfn.errors import FieldVanishesOffFix, NotInSaturation
from periodfn.flow import propagate
from periodfn.gallery import gallery_get
from periodfn.grid import disk_region, make_grid, sector_region
from periodfn.period_function import (build_period_field, check_regularity,
                                      circle_action, detect_generator,
                                      extend_period_function, iterate_d,
                                      orbit_hausdorff, two_sector_function,
                                      two_triangles_region, verify_p_function,
                                      zp_divisibility_test)

AX = np.round(np.arange(-1.0, 1.0001, 0.25), 12)


@pytest.fixture(scope="module")
def seifert_field():
    e = gallery_get("seifert", {"k": 3})
    grid = make_grid(e.domain, axes=[AX, AX, np.arange(4) / 4], region=disk_region(1.0))
    return e, build_period_field(e.flow, grid, e.detector)


def test_seifert_field_is_constant(seifert_field):
    e, fld = seifert_field
    np.testing.assert_allclose(fld.theta, 3.0, rtol=1e-10)
    centre = np.hypot(fld.points[:, 0], fld.points[:, 1]) == 0
    assert centre.sum() == 4
    assert np.all(fld.multiplier[centre] == 3)
    assert np.all(fld.multiplier[~centre] == 1)
    # the minimal period jumps on the centre circle
    assert not fld.dense_mask[centre].any() and fld.dense_mask[~centre].all()
    assert fld.verified


def test_unit_time_is_not_a_period_function_for_seifert(seifert_field):
    e, fld = seifert_field
    rep = verify_p_function(e.flow, fld.points, 1.0)
    r = np.hypot(fld.points[:, 0], fld.points[:, 1])
    # after unit time the disk has turned by a third: chord sqrt(3) r
    np.testing.assert_allclose(rep.residuals, math.sqrt(3) * r, atol=1e-12)
    assert not rep.passed


def test_no_prime_divides_the_seifert_generator(seifert_field):
    e, fld = seifert_field
    res = detect_generator(e.flow, fld)
    assert res.divisions == []
    assert res.group == "n*theta"


def test_generator_recovered_from_a_multiple(seifert_field):
    e, fld = seifert_field
    res = detect_generator(e.flow, fld.scaled(12.0))
    assert sorted(res.divisions) == [2, 2, 3]
    np.testing.assert_allclose(res.generator.theta, 3.0, rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(p=st.integers(2, 7), q=st.integers(1, 6))
def test_d_to_the_p_is_identity(seifert_field, p, q):
    e, fld = seifert_field
    X = fld.points[::5]
    its = iterate_d(e.flow, X, fld.theta[::5], q / p, p)
    assert np.max(e.domain.distance(its[-1], X)) < 1e-9


def test_zp_test_reports_nontrivial_action(seifert_field):
    e, fld = seifert_field
    rep = zp_divisibility_test(e.flow, fld.theta, 2, fld.points)
    assert rep.max_pth_iterate_displacement < 1e-9
    assert rep.max_displacement > 0.1
    assert not rep.divisible


def test_circle_action_group_law(seifert_field):
    e, fld = seifert_field
    B = circle_action(e.flow, fld)
    X = np.array([[0.3, 0.2, 0.1], [0.0, 0.0, 0.5], [-0.6, 0.1, 0.9]])
    one = B.closed_form(X, np.ones(3))
    assert np.max(e.domain.distance(one, X)) < 1e-12
    a = B.closed_form(B.closed_form(X, np.full(3, 0.3)), np.full(3, 0.45))
    b = B.closed_form(X, np.full(3, 0.75))
    assert np.max(e.domain.distance(a, b)) < 1e-12
    for x in X:
        per = 1.0 if x[0] == x[1] == 0 else 3.0
        assert orbit_hausdorff(e.flow, B, x, per, 3.0) < 1e-9


def test_c0_field_vanishes_at_origin():
    e = gallery_get("c0_disk")
    ax = np.round(np.arange(-0.5, 0.5001, 0.1), 12)
    grid = make_grid(e.domain, axes=[ax, ax], region=disk_region(0.5))
    fld = build_period_field(e.flow, grid, e.detector)
    np.testing.assert_allclose(fld.theta, e.truth.theta(fld.points), atol=1e-9)
    origin = np.all(fld.points == 0, axis=1)
    assert fld.theta[origin] == 0.0
    assert fld.verified


def test_non_periodic_points_force_zero_field():
    e = gallery_get("saddle")
    ax = np.linspace(-0.5, 0.5, 5)
    fld = build_period_field(e.flow, make_grid(e.domain, axes=[ax, ax]), e.detector)
    assert fld.trivial and np.all(fld.theta == 0)
    assert fld.reason
    with pytest.raises(FieldVanishesOffFix):
        circle_action(e.flow, fld)


def test_two_sector_function_is_periodic_but_irregular():
    e = gallery_get("c0_disk")
    region = two_triangles_region()
    ax = np.linspace(-1, 1, 21)
    G = np.array(np.meshgrid(ax, ax)).reshape(2, -1).T
    X = G[region(G) & (np.hypot(G[:, 0], G[:, 1]) > 0)]
    for m, n, regular in ((1, 2, False), (2, 2, True)):
        mu = two_sector_function(m, n)
        assert verify_p_function(e.flow, X, mu).passed
        rep = check_regularity(e.flow, mu, X)
        assert rep.regular is regular
        if not regular:
            assert rep.witnesses


def test_regularity_within_one_triangle():
    # orbit pieces that stay in the right triangle never see the other value
    e = gallery_get("c0_disk")
    tri = two_triangles_region(slope=2.0)

    def right(X):
        return tri(X) & (X[..., 0] > 0)

    X = np.array([[0.5, 0.1], [0.8, -0.2], [0.3, 0.0]])  # angles within 15 deg
    rep = check_regularity(e.flow, two_sector_function(1, 2), X, region=right)
    assert rep.regular and rep.n_compared > 0


@pytest.fixture(scope="module")
def sector_field():
    e = gallery_get("c_inf_disk")
    ax = np.round(np.arange(0.0, 1.0001, 0.05), 12)
    region = sector_region(0.5, 1.0, 0.0, math.pi / 2)
    grid = make_grid(e.domain, axes=[ax, ax], region=region)
    return e, build_period_field(e.flow, grid, e.detector), region


def test_extension_along_orbits(sector_field):
    e, fld, region = sector_field
    ang = np.array([2.0, 3.5, 5.0])
    T = 0.7 * np.column_stack([np.cos(ang), np.sin(ang)])
    ext = extend_period_function(e.flow, fld, T, region, horizon=5.0, step=0.01)
    np.testing.assert_allclose(ext.theta, 1 / 0.49, rtol=1e-9)
    assert np.max(ext.residual) < 1e-9


def test_extension_outside_saturation_fails(sector_field):
    e, fld, region = sector_field
    with pytest.raises(NotInSaturation):
        extend_period_function(e.flow, fld, [[0.25, 0.0]], region, horizon=10.0,
                               step=0.01)


def test_field_csv_layout(seifert_field):
    _, fld = seifert_field
    buf = io.StringIO()
    fld.to_csv(buf, "seed=0")
    lines = buf.getvalue().splitlines()
    assert lines[1] == "x1,x2,x3,per,theta,multiplier,dense_mask,residual"
    assert len(lines) == len(fld) + 2


def test_theta_at_off_lattice(seifert_field):
    e, fld = seifert_field
    X = np.array([[0.13, -0.27, 0.61], [0.0, 0.0, 0.33]])
    np.testing.assert_allclose(fld.theta_at(X), 3.0, rtol=1e-10)
    Y, _ = propagate(e.flow, X, fld.theta_at(X))
    assert np.max(e.domain.distance(X, Y)) < 1e-10
