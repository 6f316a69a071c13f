import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from two_boost.chord_solver import (BOUNDARY_TOL, ENERGY_TOL, ODE_TOL, DegenerateProblemError,
                                    RootOptions, TwoBoostProblem, asymptotic_interval,
                                    asymptotic_lower_bound, chord_from_eta, chords,
                                    constant_circle, f_derivative, f_eval, f_polar_eval,
                                    find_roots, free_chords, g_delta, g_delta_analysis,
                                    initial_momentum, inverse_scaling_map, parity_report,
                                    root_bound, scaled_chord, scaling_map)
from two_boost.hamiltonians import FreeHamiltonian
from two_boost.symplectic_core import DomainError, rotation
from two_boost.verification import random_problem

from conftest import energies, planar

Q0, Q1 = (1.0, 0.0), (0.0, 1.0)

# 30-digit roots of f for the unit problem, computed offline with mpmath
FROZEN_ROOTS = {
    0.2: [-1.3257389516125902128, 3.9236376636374642205],
    0.1: [-7.1136115756789109509, -4.7706030288994282568, -1.4335671755387976762,
          4.2912829229565353758, 8.562628257045345101, 9.8260157348469012079],
    0.5: [-1.1013201238974427391, 2.8278816744354820552],
    1.0: [-0.88635164594448171636, 1.2441545765354516858],
}
FROZEN_POS_005 = [4.4914364388676053944, 8.0065563809029881572, 10.460751552394302203,
                  14.805562643053213587, 16.361248886533889431]
# exact double root: f and f' vanish together at eta ~ 1.26795
DOUBLE_ROOT = TwoBoostProblem((1.0, 0.0), (0.677494166723606, 0.7355281463380493), 0.25)


def f_ref(q0, q1, c, eta):
    """f through complex arithmetic, an independent route to the same function."""
    z0, z1 = complex(*q0), complex(*q1)
    # q1^T R(s) q0 = Re(conj(z1) e^{-is} z0) for clockwise R
    w = (z1.conjugate() * z0)
    rot = (w * cmath.exp(-1j * eta)).real
    rot_q = (w * cmath.exp(-1j * (eta + math.pi / 2))).real
    return -c * eta ** 2 + eta * rot_q + 0.5 * (abs(z0) ** 2 + abs(z1) ** 2) - rot


def dense_oracle(prob, n=1_000_000):
    """Roots from sign changes on a dense grid, refined by plain bisection."""
    d0 = root_bound(prob)
    grid = np.linspace(-d0, d0, n)
    z0, z1 = complex(*prob.q0), complex(*prob.q1)
    w = z1.conjugate() * z0
    e = np.exp(-1j * grid)
    vals = (-prob.c * grid ** 2 + grid * (w * e * -1j).real
            + 0.5 * (abs(z0) ** 2 + abs(z1) ** 2) - (w * e).real)
    idx = np.nonzero(np.signbit(vals[:-1]) != np.signbit(vals[1:]))[0]
    out = []
    for i in idx:
        lo, hi = grid[i], grid[i + 1]
        flo = f_ref(prob.q0, prob.q1, prob.c, lo)
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = f_ref(prob.q0, prob.q1, prob.c, mid)
            if (fm > 0) == (flo > 0):
                lo, flo = mid, fm
            else:
                hi = mid
        out.append(0.5 * (lo + hi))
    return [r for r in out if abs(r) > 1e-9]


def test_f_at_zero_is_half_distance_squared():
    assert f_eval(TwoBoostProblem(Q0, Q1, 0.2), 0.0) == pytest.approx(1.0, abs=1e-15)


@given(planar(), planar(), energies)
def test_f_at_zero_identity(q0, q1, c):
    d = np.subtract(q1, q0)
    assert f_eval(TwoBoostProblem(q0, q1, c), 0.0) == pytest.approx(0.5 * d @ d, abs=1e-12)


@given(planar(), planar(), energies, st.floats(-30, 30))
def test_f_matches_complex_route(q0, q1, c, eta):
    assert f_eval(TwoBoostProblem(q0, q1, c), eta) == pytest.approx(
        f_ref(q0, q1, c, eta), abs=1e-10 * (1 + eta * eta))


def test_f_vectorised_matches_scalar():
    prob = TwoBoostProblem(Q0, Q1, 0.1)
    etas = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(f_eval(prob, etas), [f_eval(prob, e) for e in etas], atol=0)


@given(st.floats(0.01, 2), st.floats(0.01, 2), st.floats(0, 2 * math.pi),
       st.floats(0, 2 * math.pi), energies, st.floats(-20, 20))
def test_polar_form_agrees(r0, r1, alpha, theta, c, eta):
    # counterclockwise alpha and theta
    q0 = r0 * np.array([math.cos(alpha), math.sin(alpha)])
    q1 = r1 * np.array([math.cos(alpha + theta), math.sin(alpha + theta)])
    prob = TwoBoostProblem(q0, q1, c)
    r0p, r1p, th = prob.polar_data()
    assert f_polar_eval(r0p, r1p, th, c, eta) == pytest.approx(f_eval(prob, eta), abs=1e-10 * (1 + eta * eta))


def test_polar_anchors():
    assert f_polar_eval(1, 1, math.pi / 2, 0.2, 0.0) == pytest.approx(1.0, abs=1e-15)
    r0, r1, th, c = 1.3, 0.4, 0.7, 0.15
    for n in (1, 2, 5):
        eta = 2 * math.pi * n - th
        assert f_polar_eval(r0, r1, th, c, eta) == pytest.approx(-c * eta ** 2 + 0.5 * (r0 - r1) ** 2,
                                                                 abs=1e-12 * eta ** 2)


def test_derivative_anchors():
    prob = TwoBoostProblem(Q0, Q1, 0.5)
    assert f_derivative(prob, 0.0) == 0.0
    assert f_derivative(prob, 1.0) == pytest.approx(-(1 - math.sin(1)), abs=1e-15)
    assert f_derivative(prob, 1.0) == pytest.approx(-0.1585, abs=1e-4)


@given(planar(), planar(), energies, st.floats(-20, 20))
def test_derivative_matches_finite_difference(q0, q1, c, eta):
    prob = TwoBoostProblem(q0, q1, c)
    h = 1e-5
    fd = (f_eval(prob, eta + h) - f_eval(prob, eta - h)) / (2 * h)
    assert f_derivative(prob, eta) == pytest.approx(fd, abs=1e-6 * (1 + abs(eta)))


@given(planar(), planar(), energies)
def test_derivative_nonpositive_in_uniqueness_regime(q0, q1, c):
    if math.hypot(*q0) * math.hypot(*q1) > 2 * c:
        return
    prob = TwoBoostProblem(q0, q1, c)
    assert np.all(f_derivative(prob, np.linspace(0, 50, 2001)) <= 1e-15)


def test_root_bound_anchors():
    for c in (0.2, 0.05, 1.0):
        prob = TwoBoostProblem(Q0, Q1, c)
        assert root_bound(prob) == pytest.approx((math.sqrt(1 + 8 * c) + 1) / (2 * c), rel=1e-15)
    assert root_bound(TwoBoostProblem(Q0, Q1, 0.2)) == pytest.approx(6.531, abs=1e-3)
    assert root_bound(TwoBoostProblem(Q0, Q1, 0.2)) < 7.5
    assert root_bound(TwoBoostProblem(Q0, Q1, 0.05)) < 22


@pytest.mark.parametrize("c", sorted(FROZEN_ROOTS))
def test_roots_match_frozen_oracle(c):
    roots = find_roots(TwoBoostProblem(Q0, Q1, c))
    np.testing.assert_allclose([r.eta for r in roots], FROZEN_ROOTS[c], atol=1e-12)
    for r in roots:
        assert abs(r.f_value) < 1e-12
        assert not r.degenerate


def test_figure_counts_and_c005_roots():
    counts = [sum(r.eta > 0 for r in find_roots(TwoBoostProblem(Q0, Q1, c))) for c in (0.2, 0.1, 0.05)]
    assert counts == [1, 3, 5]
    roots = find_roots(TwoBoostProblem(Q0, Q1, 0.05))
    assert len(roots) == 12
    np.testing.assert_allclose([r.eta for r in roots if r.eta > 0], FROZEN_POS_005, atol=1e-12)
    assert roots[0].eta == pytest.approx(-19.229345733270024868, abs=1e-12)


def test_c_half_positive_root():
    pos = [r.eta for r in find_roots(TwoBoostProblem(Q0, Q1, 0.5)) if r.eta > 0]
    # the independent high-precision value is 2.82788..., not 2.829
    assert len(pos) == 1 and pos[0] == pytest.approx(2.8278816744354820552, abs=1e-12)


def test_completeness_against_dense_oracle():
    rng = np.random.default_rng(21)
    checked = 0
    while checked < 100:
        prob = random_problem(rng)
        roots = find_roots(prob)
        if any(r.degenerate for r in roots):
            continue
        ref = dense_oracle(prob)
        assert len(roots) == len(ref), prob
        np.testing.assert_allclose([r.eta for r in roots], ref, atol=1e-6)
        checked += 1


def test_coincident_endpoints_have_no_roots_when_energy_large():
    assert find_roots(TwoBoostProblem((0.5, 0.3), (0.5, 0.3), 1.0)) == []


def test_include_zero_option():
    prob = TwoBoostProblem((0.5, 0.3), (0.5, 0.3), 1.0)
    roots = find_roots(prob, RootOptions(include_zero=True))
    assert [r.eta for r in roots] == [0.0]


def test_constant_circle():
    centre, radius = constant_circle((1.0, 0.0), 0.5)
    np.testing.assert_array_equal(centre, [0.0, 1.0])
    assert radius == pytest.approx(math.sqrt(2.0))
    # every momentum on the circle puts (q, p) on the level set
    for a in np.linspace(0, 2 * math.pi, 7):
        p = centre + radius * np.array([math.cos(a), math.sin(a)])
        x = np.array([1.0, 0.0, *p])
        assert 0.5 * p @ p + p[0] * x[1] - p[1] * x[0] == pytest.approx(0.5, abs=1e-12)


@given(planar(), planar(), energies)
@settings(max_examples=40)
def test_reversal_antisymmetry(q0, q1, c):
    a = find_roots(TwoBoostProblem(q0, q1, c))
    b = find_roots(TwoBoostProblem(q1, q0, c))
    np.testing.assert_allclose(sorted(r.eta for r in a), sorted(-r.eta for r in b), atol=1e-9)


@given(planar(), planar(), energies, st.floats(0, 2 * math.pi))
@settings(max_examples=40)
def test_rotation_invariance(q0, q1, c, alpha):
    R = rotation(alpha)
    a = find_roots(TwoBoostProblem(q0, q1, c))
    b = find_roots(TwoBoostProblem(R @ q0, R @ q1, c))
    assert len(a) == len(b)
    np.testing.assert_allclose([r.eta for r in a], [r.eta for r in b], atol=1e-10)


def test_parity_on_random_generic_problems():
    rng = np.random.default_rng(5)
    done = 0
    while done < 200:
        prob = random_problem(rng)
        if np.allclose(prob.q0a, prob.q1a):
            continue
        try:
            rep = parity_report(prob)
        except DegenerateProblemError:
            continue
        assert rep.both_odd and rep.sign_alternation, prob
        done += 1


def test_parity_anchors():
    rep = parity_report(TwoBoostProblem(Q0, Q1, 0.1))
    assert rep.n_plus == 3 and rep.both_odd
    rep = parity_report(TwoBoostProblem(Q0, Q1, 0.5))
    assert rep.n_plus == rep.n_minus == 1


def test_double_root_is_flagged():
    roots = find_roots(DOUBLE_ROOT)
    flagged = [r for r in roots if r.degenerate]
    assert flagged
    assert all(abs(r.eta - 1.26795) < 1e-3 for r in flagged)
    with pytest.raises(DegenerateProblemError, match="perturb"):
        parity_report(DOUBLE_ROOT)
    # a small energy nudge restores genericity
    assert not any(r.degenerate for r in find_roots(DOUBLE_ROOT.nudged(1e-6)))


def test_asymptotic_bound_anchors():
    lo, hi = asymptotic_interval(1, 1, math.pi / 2, 0.05)
    assert lo == pytest.approx(0.5) and hi == pytest.approx(1.5132, abs=1e-4)
    assert asymptotic_lower_bound(1, 1, math.pi / 2, 0.05) == 1
    assert asymptotic_lower_bound(0, 1.5, 0.3, 0.01) == 0
    with pytest.raises(ValueError):
        asymptotic_lower_bound(-1, 1, 0.0, 0.1)


@given(st.floats(0.05, 3), st.floats(0.05, 3), st.floats(0, 2 * math.pi), st.floats(1e-3, 1))
def test_asymptotic_interval_length(r0, r1, theta, c):
    lo, hi = asymptotic_interval(r0, r1, theta, c)
    assert hi - lo == pytest.approx(math.sqrt(2) * min(r0, r1) / (math.pi * math.sqrt(c)) - 1, abs=1e-12 * (1 + hi))


def test_asymptotic_bound_below_count_on_sweep():
    last = 0
    for k in range(7):
        c = 0.2 / 2 ** k
        n_plus = sum(r.eta > 0 for r in find_roots(TwoBoostProblem(Q0, Q1, c)))
        assert asymptotic_lower_bound(1, 1, math.pi / 2, c) <= n_plus
        assert n_plus > last
        last = n_plus


def test_chord_from_eta_certificates():
    prob = TwoBoostProblem(Q0, Q1, 0.2)
    for ch in chords(prob):
        assert ch.residuals["boundary"] <= BOUNDARY_TOL
        assert ch.residuals["energy"] <= ENERGY_TOL
        assert ch.residuals["ode"] <= ODE_TOL
        assert ch.certified()
        np.testing.assert_array_equal(ch.samples[0, :2], Q0)
        np.testing.assert_allclose(ch.samples[-1, :2], Q1, atol=1e-15)
        np.testing.assert_allclose(ch.p0, initial_momentum(Q0, Q1, ch.eta), atol=1e-14)
        assert ch.n_samples == 256


def test_chord_from_eta_rejects_zero():
    with pytest.raises(DomainError):
        chord_from_eta(TwoBoostProblem(Q0, Q1, 0.2), 0.0)


def test_chord_path_resampling():
    ch = chords(TwoBoostProblem(Q0, Q1, 0.1))[2]
    np.testing.assert_allclose(ch.path(256), ch.samples, atol=1e-14)


def test_certificates_on_random_problems(rng):
    for _ in range(50):
        for ch in chords(random_problem(rng)):
            assert ch.certified(), ch.residuals


@pytest.mark.parametrize("delta", [0.01, 0.1, 0.5, 1.0])
def test_scaling_round_trip(delta):
    eta_d = g_delta_analysis(Q0, Q1, delta).eta_delta if delta < 1 else 1.2441545765354516858
    ch = scaled_chord(Q0, Q1, delta, eta_d)
    assert ch.certified(), ch.residuals
    img = scaling_map(ch, delta)
    assert img.certified(), img.residuals
    assert img.c == pytest.approx(1 / delta)
    assert np.max(np.abs(img.hamiltonian.value(img.samples) - 1 / delta)) <= 1e-8
    back = inverse_scaling_map(img, delta)
    np.testing.assert_allclose(back.samples, ch.samples, atol=1e-12)
    assert back.eta == pytest.approx(ch.eta, abs=1e-12)


def test_scaling_identity_at_one():
    ch = chords(TwoBoostProblem(Q0, Q1, 1.0))[1]
    img = scaling_map(ch, 1.0)
    np.testing.assert_array_equal(img.samples, ch.samples)
    assert img.eta == ch.eta


def test_scaling_rejects_nonpositive_delta():
    ch = chords(TwoBoostProblem(Q0, Q1, 1.0))[1]
    with pytest.raises(ValueError):
        scaling_map(ch, 0.0)


# eta_delta for the unit problem, computed offline with mpmath
FROZEN_ETA_DELTA = {0.5: 1.021396921769395644613309, 0.1: 1.000166569346601302044254,
                    0.01: 1.000000166665069448489427, 0.001: 1.000000000166666650069445}


@pytest.mark.parametrize("delta", sorted(FROZEN_ETA_DELTA))
def test_g_delta_root_and_bounds(delta):
    res = g_delta_analysis(Q0, Q1, delta)
    assert res.eta_delta == pytest.approx(FROZEN_ETA_DELTA[delta], abs=1e-11)
    assert res.lower <= res.eta_delta <= res.upper
    assert abs(g_delta(Q0, Q1, delta, res.eta_delta)) < 1e-10


def test_g_delta_example_window_and_limit():
    res = g_delta_analysis(Q0, Q1, 0.1)
    assert 0.995 <= res.eta_delta <= 1.006
    assert abs(g_delta_analysis(Q0, Q1, 1e-3).eta_delta - 1.0) < 1e-4


def test_limit_chord_is_straight_segment():
    ch = scaled_chord(Q0, Q1, 1e-4, g_delta_analysis(Q0, Q1, 1e-4).eta_delta)
    t = np.linspace(0, 1, ch.n_samples)[:, None]
    np.testing.assert_allclose(ch.samples[:, :2], (1 - t) * np.array(Q0) + t * np.array(Q1), atol=1e-3)
    p = math.sqrt(2) * np.subtract(Q1, Q0) / math.sqrt(2)
    np.testing.assert_allclose(ch.samples[:, 2:], np.broadcast_to(p, (ch.n_samples, 2)), atol=1e-3)


def test_g_delta_range_errors():
    with pytest.raises(ValueError, match="delta"):
        g_delta_analysis(Q0, Q1, 1.5)
    with pytest.raises(ValueError):
        g_delta_analysis(Q0, Q0, 0.1)


def test_free_chords_anchor():
    plus, minus = free_chords((0.0, 0.0), (1.0, 1.0), 1.0)
    assert plus.eta == pytest.approx(1.0) and minus.eta == pytest.approx(-1.0)
    H = FreeHamiltonian()
    for ch in (plus, minus):
        assert np.max(np.abs(H.value(ch.samples) - 1.0)) <= 1e-12
        assert np.ptp(ch.samples[:, 2:], axis=0).max() == 0.0
        assert ch.certified()


def test_free_chords_reject_equal_endpoints():
    with pytest.raises(DomainError):
        free_chords((1.0, 2.0), (1.0, 2.0), 1.0)


def test_problem_validation():
    with pytest.raises(ValueError):
        TwoBoostProblem(Q0, Q1, 0.0)
    with pytest.raises(ValueError):
        TwoBoostProblem((math.nan, 0.0), Q1, 1.0)
    with pytest.raises(ValueError):
        TwoBoostProblem((1.0, 0.0, 0.0), Q1, 1.0)


@given(st.floats(0.05, 3.0), energies, st.floats(0, 2 * math.pi))
@settings(max_examples=60)
def test_root_on_the_bound_is_found(b, c, alpha):
    # with q0 = 0, f = b^2/2 - c eta^2 has its roots exactly at +-delta0
    q1 = (b * math.cos(alpha), b * math.sin(alpha))
    for prob in (TwoBoostProblem((0.0, 0.0), q1, c), TwoBoostProblem(q1, (0.0, 0.0), c)):
        d0 = root_bound(prob)
        etas = [r.eta for r in find_roots(prob)]
        assert len(etas) == 2
        np.testing.assert_allclose(etas, [-d0, d0], rtol=1e-12)
        assert all(abs(e) <= d0 for e in etas)
