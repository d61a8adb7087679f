import io
import math

import numpy as np
import pytest
from scipy.special import beta

from periodfn.detect import (DetectorConfig, classify_batch, classify_point,
                             period_lower_bound_probe, write_csv)
from periodfn.gallery import gallery_get, half_period_integral, hamiltonian_period

# half the lemniscate constant: int_0^1 du / sqrt(1 - u^4)
LEMNISCATE_HALF = 1.3110287771461


@pytest.mark.parametrize("b", [2, 3, 4, 5])
def test_half_period_integral_matches_beta_function(b):
    # substituting v = u^(2b) gives B(1/(2b), 1/2) / (2b)
    assert half_period_integral(b) == pytest.approx(beta(1 / (2 * b), 0.5) / (2 * b),
                                                    rel=1e-12)


def test_quartic_oscillator_period_frozen():
    assert half_period_integral(2) == pytest.approx(LEMNISCATE_HALF, rel=1e-12)
    # c = 1/16 so Per = 2 I c^(-1/4) = 4 I
    assert hamiltonian_period([0.5, 0.0], 2)[0] == pytest.approx(4 * LEMNISCATE_HALF,
                                                                 rel=1e-12)


CASES = [
    ("seifert", {"k": 3}, [[0.5, 0.1, 0.2], [0.0, 0.0, 0.7], [-0.3, 0.6, 0.9]]),
    ("seifert", {"k": 5}, [[0.2, 0.2, 0.0], [0.0, 0.0, 0.1]]),
    ("c_inf_disk", {}, [[0.5, 0.0], [0.3, 0.7], [1.2, -0.4]]),
    ("c0_disk", {}, [[0.5, 0.0], [0.3, -0.7]]),
    ("hamiltonian_even", {"b": 2}, [[0.5, 0.0], [0.2, 0.3], [1.1, -0.2]]),
    ("hamiltonian_even", {"b": 3}, [[0.7, 0.1]]),
    ("rotation", {"beta": 3.0}, [[1.0, 0.0], [-2.0, 0.5]]),
    ("flat_circle", {}, [[0.0, 0.0, 0.5, 0.1], [0.0, 0.0, -0.2, 0.3]]),
    ("linear", {"blocks": [("complex", 0.0, 2.0), ("complex", 0.0, 3.0)]},
     [[0.3, 0.0, 0.0, 0.2]]),
]


@pytest.mark.parametrize("name,params,points", CASES)
def test_detected_period_matches_truth(name, params, points):
    entry = gallery_get(name, params)
    X = np.array(points)
    batch = classify_batch(entry.flow, X, entry.detector)
    if entry.truth.period is not None:
        truth = entry.truth.period(X)
    else:
        # rotations with periods pi and 2*pi/3 close up after 2*pi together
        truth = np.full(len(X), 2 * math.pi)
    assert batch.periodic.all(), batch.status
    np.testing.assert_allclose(batch.period, truth, rtol=1e-8)
    assert np.all(batch.residual < 1e-6)


def test_fixed_points_are_reported_fixed():
    for name in ("c_inf_disk", "c0_disk", "hamiltonian_even", "saddle", "rotation"):
        entry = gallery_get(name)
        assert classify_point(entry.flow, [0.0, 0.0], entry.detector).status == "Fixed"


def test_saddle_orbits_are_not_periodic():
    entry = gallery_get("saddle")
    res = classify_point(entry.flow, [0.3, 0.2], entry.detector)
    assert res.status in ("NonPeriodicEvidence", "Unknown")
    assert not res.is_periodic


def test_flat_circle_off_axis_is_not_periodic():
    entry = gallery_get("flat_circle")
    res = classify_point(entry.flow, [0.1, 0.0, 0.5, 0.0], entry.detector)
    assert res.status == "NonPeriodicEvidence"
    assert res.evidence > 1e-3


def test_minimal_period_not_a_multiple():
    # period 2*pi/3 orbit must not be reported as 4*pi/3 or 2*pi
    entry = gallery_get("rotation", {"beta": 3.0})
    res = classify_point(entry.flow, [0.0, 1.0], entry.detector)
    assert res.minimal_period == pytest.approx(2 * math.pi / 3, rel=1e-9)


def test_periods_bounded_below_near_a_nonfixed_point():
    entry = gallery_get("seifert", {"k": 3})
    probe = period_lower_bound_probe(entry.flow, [0.0, 0.0, 0.0], [0.1, 0.01, 0.001],
                                     entry.detector)
    # every point near the centre circle has period k
    assert probe.infimum == pytest.approx(3.0, rel=1e-8)


def test_csv_is_deterministic():
    entry = gallery_get("c_inf_disk")
    X = np.random.default_rng(7).uniform(-1, 1, (20, 2))
    outs = []
    for threads in (1, 3):
        buf = io.StringIO()
        write_csv(buf, classify_batch(entry.flow, X, entry.detector, threads), "seed=7")
        outs.append(buf.getvalue())
    assert outs[0] == outs[1]
    lines = outs[0].splitlines()
    assert lines[0] == "# seed=7"
    assert lines[1] == "x1,x2,status,minimal_period,return_residual,evidence"
    assert len(lines) == 22


def test_config_validation():
    with pytest.raises(ValueError):
        DetectorConfig(horizon=-1.0)
    with pytest.raises(ValueError):
        DetectorConfig(return_tol=0.0)
