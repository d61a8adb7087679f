import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from periodfn.errors import TrajectoryLeftDomain
from periodfn.flow import Domain, FlowSpec, evaluate_field, evaluate_flow, propagate
from periodfn.gallery import gallery_get

TORUS = Domain((-1, -1, 0), (1, 1, 1), (False, False, True))
coord = st.floats(-1, 1)
turn = st.floats(0, 1, exclude_max=True)
torus_pt = st.tuples(coord, coord, turn).map(np.array)


@given(torus_pt, torus_pt, torus_pt)
def test_distance_is_a_metric(a, b, c):
    d = TORUS.distance
    assert d(a, a) == 0
    assert d(a, b) >= 0
    assert d(a, b) == pytest.approx(d(b, a), abs=1e-15)
    assert d(a, c) <= d(a, b) + d(b, c) + 1e-12


@given(torus_pt, st.floats(-5, 5))
def test_wrap_is_idempotent_and_distance_invariant(a, shift):
    b = a.copy()
    b[2] += np.round(shift)
    w = TORUS.wrap(b)
    assert 0 <= w[2] < 1
    np.testing.assert_array_equal(TORUS.wrap(w), w)
    assert TORUS.distance(a, b) < 1e-12


CLOSED = [("seifert", {"k": 3}, [0.4, -0.2, 0.3]),
          ("c_inf_disk", {}, [0.3, 0.4]),
          ("c0_disk", {}, [0.3, -0.1]),
          ("rotation", {"beta": 2.5}, [1.0, 2.0]),
          ("saddle", {}, [0.5, 0.2])]
INTEGRATED = [("hamiltonian_even", {"b": 2}, [0.6, 0.1]),
              ("flat_circle", {}, [0.0, 0.0, 0.3, 0.2]),
              ("linear", {"blocks": [("complex", 0.0, 1.0), ("real", -0.5, 1)]},
               [0.3, 0.1, 0.2])]


@pytest.mark.parametrize("name,params,x", CLOSED + INTEGRATED)
@settings(max_examples=15, deadline=None)
@given(s=st.floats(-1.5, 1.5), t=st.floats(-1.5, 1.5))
def test_group_law(name, params, x, s, t):
    flow = gallery_get(name, params).flow
    x = np.array(x, dtype=float)
    tol = 1e-12 if flow.kind == "closed_form" else 1e-7
    a = evaluate_flow(flow, evaluate_flow(flow, x, s), t)
    b = evaluate_flow(flow, x, s + t)
    assert flow.domain.distance(a, b) < tol
    assert flow.domain.distance(evaluate_flow(flow, x, 0.0), x) < 1e-12


@pytest.mark.parametrize("name,params,x", CLOSED + INTEGRATED)
def test_reversibility(name, params, x):
    flow = gallery_get(name, params).flow
    x = np.array(x, dtype=float)
    tol = 1e-12 if flow.kind == "closed_form" else 1e-7
    for t in (0.3, 1.7):
        back = evaluate_flow(flow, evaluate_flow(flow, x, t), -t)
        assert flow.domain.distance(back, x) < tol


def test_closed_form_field_by_finite_difference():
    flow = gallery_get("c_inf_disk").flow
    x = np.array([0.3, 0.4])
    # angular speed 2*pi*r^2 for period 1/r^2
    expected = 2 * np.pi * 0.25 * np.array([-0.4, 0.3])
    np.testing.assert_allclose(evaluate_field(flow, x), expected, rtol=1e-6)


def test_leaving_the_domain_is_reported():
    flow = gallery_get("hamiltonian_even", {"b": 2}).flow
    with pytest.raises(TrajectoryLeftDomain):
        evaluate_flow(flow, [3.0, 0.0], 0.5)
    _, ok = propagate(flow, np.array([[3.0, 0.0], [0.5, 0.0]]), 0.5)
    assert ok.tolist() == [False, True]


def test_c0_flow_must_be_closed_form():
    with pytest.raises(ValueError):
        FlowSpec(Domain.euclidean(2), "vector_field", field=lambda X: X, smoothness="C0")


def test_periodic_coordinate_must_span_unit_interval():
    with pytest.raises(ValueError):
        Domain((0, 0), (1, 2), (False, True))
