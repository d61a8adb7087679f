import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from periodfn.errors import InvalidParam, UnknownName
from periodfn.flow import Domain, evaluate_field
from periodfn.gallery import NAMES, block_matrix, gallery_get
from periodfn.grid import disk_region, interpolate, make_grid, sector_region


def test_every_name_builds():
    for name in NAMES:
        e = gallery_get(name)
        assert e.name == name
        assert e.flow.dim == e.domain.dim


@pytest.mark.parametrize("name,params", [
    ("seifert", {"k": 1}), ("seifert", {"k": 2.5}), ("hamiltonian_even", {"b": 1}),
    ("rotation", {"speed": 1.0}), ("linear", {"blocks": [("bogus", 1.0)]})])
def test_invalid_parameters(name, params):
    with pytest.raises(InvalidParam):
        gallery_get(name, params)


def test_unknown_name():
    with pytest.raises(UnknownName):
        gallery_get("lorenz")


def test_hamiltonian_field_value():
    # x' = -2y, y' = 2b x^(2b-1) at (1, 1) with b = 2
    e = gallery_get("hamiltonian_even", {"b": 2})
    np.testing.assert_allclose(evaluate_field(e.flow, [1.0, 1.0]), [-2.0, 4.0])


def test_closed_form_and_field_agree():
    for name, x in (("seifert", [0.3, 0.4, 0.1]), ("c_inf_disk", [0.3, 0.4]),
                    ("rotation", [0.3, 0.4])):
        f = gallery_get(name).flow
        h = 1e-6
        fd = (f.closed_form(np.array(x), h) - f.closed_form(np.array(x), -h)) / (2 * h)
        np.testing.assert_allclose(fd, f.field(np.array([x]))[0], rtol=1e-7)


def test_block_matrix_layout():
    A = block_matrix([("real", 2.0, 2), ("complex", 0.0, 3.0)])
    expected = np.array([[2, 1, 0, 0], [0, 2, 0, 0], [0, 0, 0, -3], [0, 0, 3, 0]], float)
    np.testing.assert_array_equal(A, expected)


def test_flat_circle_jacobian_has_nilpotent_block():
    J = gallery_get("flat_circle").truth.jacobian_at_fixed
    np.testing.assert_allclose(sorted(np.abs(np.linalg.eigvals(J).imag)), [0, 0, 1, 1],
                               atol=1e-12)
    N = J[:2, :2]
    assert np.any(N != 0) and np.all(N @ N == 0)


def test_grid_neighbours_and_boundary():
    dom = Domain.euclidean(2)
    ax = np.linspace(-1, 1, 11)
    g = make_grid(dom, axes=[ax, ax], region=disk_region(1.0))
    assert len(g) == np.sum(np.hypot(*np.meshgrid(ax, ax)) <= 1 + 1e-12)
    centre = int(np.nonzero(np.all(g.points == 0, axis=1))[0][0])
    assert np.all(g.neighbors[centre] >= 0)
    assert not g.boundary_mask[centre]
    assert g.boundary_mask[np.nonzero(np.all(g.points == [1, 0], axis=1))[0][0]]
    assert len(g.ring(centre, 1)) == 8


def test_periodic_axis_wraps():
    dom = Domain((0.0, 0.0), (1.0, 1.0), (False, True))
    g = make_grid(dom, axes=[np.linspace(0, 1, 3), np.arange(4) / 4])
    assert np.all(g.neighbors[:, 2:] >= 0)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(-3, 3))
def test_interpolation_reproduces_bilinear_functions(x, y, a, b, c):
    dom = Domain.euclidean(2)
    ax = np.linspace(-1, 1, 9)
    g = make_grid(dom, axes=[ax, ax])
    f = lambda P: a * P[:, 0] + b * P[:, 1] + c * P[:, 0] * P[:, 1]
    got = interpolate(g, f(g.points), np.array([[x, y]]))
    assert got[0] == pytest.approx(f(np.array([[x, y]]))[0], abs=1e-12)


def test_sector_region():
    reg = sector_region(0.5, 1.0, 0.0, math.pi / 2)
    P = np.array([[0.6, 0.1], [0.1, 0.6], [-0.6, 0.1], [0.2, 0.1]])
    assert reg(P).tolist() == [True, True, False, False]
