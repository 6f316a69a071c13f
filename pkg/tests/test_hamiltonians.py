import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from two_boost.hamiltonians import (CompactBumpPotential, CopernicanH0, FreeHamiltonian, GridSpec,
                                    PerturbationCandidate, PerturbedHamiltonian, Potential,
                                    ScaledHamiltonian, ZeroPotential, class_H_check, h0_eval,
                                    h0_grad, h0_polar, h0_vector_field, liouville_pairing,
                                    perturbed_vector_field, polar_to_cartesian_tangent,
                                    scaling_symplecto)
from two_boost.symplectic_core import DomainError, J4, from_polar, to_polar

from conftest import phase_points


class InverseR(Potential):
    """V = 1/r, only used for the polar field check."""

    def V(self, r, theta):
        return 1.0 / np.asarray(r, dtype=float)

    def dVdr(self, r, theta):
        return -1.0 / np.asarray(r, dtype=float) ** 2


def fd_grad(fn, x, h=1e-6):
    g = np.zeros(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        g[i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def test_h0_anchors():
    assert h0_eval(np.array([1.0, 0.0, 0.0, 0.0])) == 0.0
    assert h0_eval(np.array([0.0, 0.0, 1.0, 1.0])) == 1.0
    np.testing.assert_array_equal(h0_vector_field(np.zeros(4)), np.zeros(4))
    np.testing.assert_array_equal(h0_vector_field(np.array([1.0, 0.0, 0.0, 0.0])), [0, -1, 0, 0])


@given(phase_points(r_min=1e-2))
def test_h0_polar_form_agrees(x):
    r, _, pr, pt = to_polar(x)
    assert h0_polar(r, pr, pt) == pytest.approx(float(h0_eval(x)), abs=1e-12 * (1 + np.abs(x).max() ** 2))


def test_liouville_anchors():
    assert liouville_pairing(np.array([0.3, -0.2, 0.0, 0.0])) == 0.0
    assert liouville_pairing(np.array([0.0, 0.0, 1.0, 0.0])) == 1.0


@given(phase_points())
def test_liouville_identity(x):
    lhs = liouville_pairing(x) - 0.5 * (x[2] ** 2 + x[3] ** 2) - h0_eval(x)
    assert abs(lhs) < 1e-12 * (1 + np.abs(x).max() ** 2)


HAMILTONIANS = [CopernicanH0(), FreeHamiltonian(), ScaledHamiltonian(0.3),
                PerturbedHamiltonian(CompactBumpPotential(0.5, 2.0))]


@pytest.mark.parametrize("H", HAMILTONIANS, ids=lambda H: type(H).__name__)
def test_gradient_matches_finite_difference(H, rng):
    for x in rng.uniform(-1.5, 1.5, size=(50, 4)):
        np.testing.assert_allclose(H.grad(x), fd_grad(H.value, x), atol=1e-6)


@pytest.mark.parametrize("H", HAMILTONIANS, ids=lambda H: type(H).__name__)
def test_energy_conservation(H, rng):
    for x in rng.uniform(-1.5, 1.5, size=(50, 4)):
        assert abs(fd_grad(H.value, x) @ H.field(x)) < 1e-8
        assert abs(H.grad(x) @ H.field(x)) < 1e-10


def test_field_is_symplectic_gradient(rng):
    x = rng.normal(size=4)
    np.testing.assert_allclose(CopernicanH0().field(x), h0_grad(x) @ J4.T)


@pytest.mark.parametrize("delta", [0.1, 1.0, 3.0])
def test_scaling_identity(delta, rng):
    H = ScaledHamiltonian(delta)
    for x in rng.uniform(-2, 2, size=(100, 4)):
        assert abs(H.value(x) - delta * h0_eval(scaling_symplecto(x, delta))) < 1e-12


@pytest.mark.parametrize("delta", [0.1, 1.0, 3.0])
def test_scaled_linear_flow_matches_field(delta):
    H = ScaledHamiltonian(delta)
    h = 1e-6
    t = 0.7
    fd = (H.linear_flow(t + h) - H.linear_flow(t - h)) / (2 * h)
    # d/dt M = J Hess(H) M; the Hessian is the Jacobian of the gradient
    Hess = np.column_stack([H.grad(np.eye(4)[i]) - H.grad(np.zeros(4)) for i in range(4)])
    np.testing.assert_allclose(fd, J4 @ Hess @ H.linear_flow(t), atol=1e-6)


def test_perturbed_polar_field_anchors():
    # counterclockwise theta, p_theta = q1 p2 - q2 p1: at rest on the unit circle the
    # rotating frame carries points clockwise
    H = PerturbedHamiltonian(ZeroPotential())
    v = perturbed_vector_field(H, from_polar(1.0, 0.0, 0.0, 0.0))
    np.testing.assert_allclose(v, [0.0, -1.0, 0.0, 0.0], atol=1e-15)
    H = PerturbedHamiltonian(InverseR())
    v = perturbed_vector_field(H, from_polar(2.0, 0.3, 0.0, 0.0))
    assert v[2] == pytest.approx(-0.25)


def test_perturbed_field_requires_radius():
    with pytest.raises(DomainError):
        perturbed_vector_field(PerturbedHamiltonian(ZeroPotential()), np.zeros(4))


@given(phase_points(r_min=0.05))
@settings(max_examples=200)
def test_polar_field_pushes_forward(x):
    H = PerturbedHamiltonian(ZeroPotential())
    cart = polar_to_cartesian_tangent(x, perturbed_vector_field(H, x))
    np.testing.assert_allclose(cart, h0_vector_field(x), atol=1e-10 * (1 + np.abs(x).max() ** 3))


def test_polar_field_pushes_forward_with_potential(rng):
    V = CompactBumpPotential(0.7, 3.0)
    H = PerturbedHamiltonian(V)
    for x in rng.uniform(-1.5, 1.5, size=(50, 4)):
        if math.hypot(x[0], x[1]) < 0.05:
            continue
        cart = polar_to_cartesian_tangent(x, perturbed_vector_field(H, x))
        np.testing.assert_allclose(cart, H.field(x), atol=1e-10)


def _const(c):
    return PerturbationCandidate(h=lambda x: np.full(np.shape(x)[:-1], c),
                                 gradient=lambda x: np.zeros(np.shape(x)),
                                 support_radius=1.0, momentum_radius=1.0)


def _bump(c, V):
    return PerturbationCandidate(h=lambda x: c + V.value_q(np.asarray(x)[..., :2]),
                                 gradient=lambda x: np.concatenate(
                                     [V.grad_q(np.asarray(x)[..., :2]),
                                      np.zeros(np.shape(x)[:-1] + (2,))], axis=-1),
                                 support_radius=V.radius)


SMALL = GridSpec(n_r=24, n_theta=24, n_p=12)


def test_class_H_constant():
    rep = class_H_check(_const(0.3), SMALL)
    assert rep.member
    assert rep.c_estimate == pytest.approx(0.3, abs=1e-8)
    assert rep.note


def test_class_H_bump_potential():
    rep = class_H_check(_bump(0.2, CompactBumpPotential(1.0, 1.5)), SMALL)
    assert rep.member
    # c + V(q) has dh supported over a disc in q for every p
    assert not rep.compact_support and "cylinder" in rep.note


def test_class_H_rejects_false_momentum_claim():
    cand = _bump(0.2, CompactBumpPotential(1.0, 1.5))
    boxed = PerturbationCandidate(h=cand.h, gradient=cand.gradient, support_radius=1.5,
                                  momentum_radius=1.0)
    rep = class_H_check(boxed, SMALL)
    assert not rep.member


def test_class_H_rejects_negative():
    rep = class_H_check(_const(-1.0), SMALL)
    assert not rep.member
    assert any(v["predicate"] == "h > 0" for v in rep.violations)


def test_class_H_rejects_false_support_claim():
    cand = _bump(0.2, CompactBumpPotential(1.0, 2.0))
    bad = PerturbationCandidate(h=cand.h, gradient=cand.gradient, support_radius=1.0)
    rep = class_H_check(bad, SMALL)
    assert not rep.member
    assert any(v["predicate"] == "dh = 0 outside support" for v in rep.violations)


def test_class_H_family_monotone():
    ests = []
    for s in np.linspace(0.0, 1.0, 6):
        V = CompactBumpPotential(s, 1.5)
        rep = class_H_check(_bump(0.25, V), SMALL)
        assert rep.member
        ests.append(rep.c_estimate)
    assert all(b <= a + 1e-15 for a, b in zip(ests, ests[1:]))


@given(st.floats(min_value=0.05, max_value=3.0))
@settings(max_examples=20)
def test_class_H_constant_estimate(c):
    rep = class_H_check(_const(c), GridSpec(n_r=8, n_theta=8, n_p=8))
    assert rep.member and rep.c_estimate == pytest.approx(c, abs=1e-8)
