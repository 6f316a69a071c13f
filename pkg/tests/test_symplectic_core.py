import math

import numpy as np
import pytest
from hypothesis import given

from two_boost.symplectic_core import (A_H0, EXACT_TOL, FD_TOL, J4, OMEGA, DomainError,
                                       PhasePoint, flow_generator, flow_matrix, from_polar,
                                       is_symplectic, rotation, symplectic_form, to_polar)

from conftest import angles, phase_points


def test_rotation_anchors():
    assert np.array_equal(rotation(0.0), np.eye(2))
    np.testing.assert_allclose(rotation(math.pi / 2), [[0, 1], [-1, 0]], atol=1e-16)
    np.testing.assert_allclose(rotation(0.3) @ rotation(0.4), rotation(0.7), atol=EXACT_TOL)


@given(angles, angles)
def test_rotation_group_law(s, t):
    np.testing.assert_allclose(rotation(s) @ rotation(t), rotation(s + t), atol=EXACT_TOL)
    np.testing.assert_allclose(rotation(-t), rotation(t).T, atol=EXACT_TOL)


@given(angles)
def test_rotation_derivative(t):
    h = 1e-6
    fd = (rotation(t + h) - rotation(t - h)) / (2 * h)
    np.testing.assert_allclose(fd, rotation(t + math.pi / 2), atol=FD_TOL)


def test_flow_matrix_anchors():
    assert np.array_equal(flow_matrix(0.0), np.eye(4))
    shear = np.block([[np.eye(2), 2 * math.pi * np.eye(2)], [np.zeros((2, 2)), np.eye(2)]])
    np.testing.assert_allclose(flow_matrix(2 * math.pi), shear, atol=1e-14)
    M = flow_matrix(1.37)
    np.testing.assert_allclose(M.T @ OMEGA @ M, OMEGA, atol=EXACT_TOL)
    assert is_symplectic(M)


@given(angles, angles)
def test_flow_matrix_one_parameter_group(s, t):
    np.testing.assert_allclose(flow_matrix(s) @ flow_matrix(t), flow_matrix(s + t),
                               atol=EXACT_TOL * (1 + abs(s) + abs(t)))


@given(angles)
def test_flow_matrix_solves_linear_ode(t):
    h = 1e-6
    fd = (flow_matrix(t + h) - flow_matrix(t - h)) / (2 * h)
    np.testing.assert_allclose(fd, flow_generator() @ flow_matrix(t), atol=FD_TOL * (1 + abs(t)))


def test_generator_is_J_times_hessian():
    np.testing.assert_allclose(flow_generator(), J4 @ A_H0)


def test_symplectic_form_matches_matrix(rng):
    a, b = rng.normal(size=(2, 4))
    assert symplectic_form(a, b) == pytest.approx(a @ OMEGA @ b)
    assert symplectic_form(a, a) == 0.0


def test_polar_anchors():
    r, th, pr, pt = to_polar(np.array([1.0, 0.0, 0.0, 1.0]))
    assert (r, th, pr, pt) == (1.0, 0.0, 0.0, 1.0)
    r, th, pr, pt = to_polar(np.array([0.0, 2.0, 1.0, 0.0]))
    assert r == 2.0 and th == pytest.approx(math.pi / 2)
    assert pr == pytest.approx(0.0, abs=1e-16) and pt == -2.0


def test_polar_rejects_origin():
    with pytest.raises(DomainError):
        to_polar(np.array([0.0, 0.0, 1.0, 0.0]))


@given(phase_points(r_min=1e-2))
def test_polar_round_trip(x):
    np.testing.assert_allclose(from_polar(*to_polar(x)), x, atol=EXACT_TOL * (1 + np.abs(x).max()))


def test_polar_round_trip_1000(rng):
    xs = rng.uniform(-3, 3, size=(1000, 4))
    xs = xs[np.hypot(xs[:, 0], xs[:, 1]) > 1e-3]
    back = np.array([from_polar(*to_polar(x)) for x in xs])
    assert np.max(np.abs(back - xs)) < EXACT_TOL * 10


def test_phase_point_views():
    x = PhasePoint(q=(0.0, 2.0), p=(1.0, 0.0))
    assert PhasePoint.from_array(x.as_array()) == x
    y = PhasePoint.from_polar(*x.to_polar())
    np.testing.assert_allclose(y.as_array(), x.as_array(), atol=1e-15)
