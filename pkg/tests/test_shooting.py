import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from two_boost.action_index import sign_action_check
from two_boost.chord_solver import (BOUNDARY_TOL, ENERGY_TOL, ODE_TOL, TwoBoostProblem,
                                    find_roots)
from two_boost.hamiltonians import CopernicanH0, PerturbedHamiltonian, Potential, ZeroPotential
from two_boost.potential_cutoff import (RadialPowerPotential, chord_radius_bound, cutoff_spec,
                                        phi_eval)
from two_boost.shooting import (IntegratorConfig, NoIntersectionError, ShootOptions,
                                closed_form_seeds, compare_crit_sets, default_seeds,
                                energy_circle, integrate, psi_of_momentum, shoot)
from two_boost.symplectic_core import flow_matrix
from two_boost.verification import random_problem

from conftest import energies, phase_points, planar

Q0, Q1 = (1.0, 0.0), (0.0, 1.0)
CUBIC = RadialPowerPotential(0.1, 3.0, 1.0)


class Sink(Potential):
    """Constant negative potential deep enough to empty the fiber over small q."""

    def V(self, r, theta):
        return np.full_like(np.asarray(r, dtype=float), -5.0)

    def dVdr(self, r, theta):
        return np.zeros_like(np.asarray(r, dtype=float))


def test_energy_circle_free():
    p_of, centre, rho = energy_circle((0.0, 0.0), 0.5)
    assert rho == 1.0
    np.testing.assert_array_equal(centre, [0.0, 0.0])
    q = np.array([0.3, -1.2])
    _, centre, rho = energy_circle(q, 0.7)
    np.testing.assert_array_equal(centre, [1.2, 0.3])
    assert rho == pytest.approx(math.sqrt(q @ q + 1.4))


@given(planar(), energies, st.floats(-math.pi, math.pi))
def test_energy_circle_on_level(q, c, psi):
    for V, H in ((None, CopernicanH0()), (CUBIC, PerturbedHamiltonian(CUBIC))):
        p_of, _, _ = energy_circle(q, c, V)
        x = np.array([*q, *p_of(psi)])
        assert float(H.value(x)) == pytest.approx(c, abs=1e-14 * (1 + float(np.abs(x).max()) ** 2))
        assert psi_of_momentum(q, p_of(psi), c, V) == pytest.approx(psi, abs=1e-12)


def test_energy_circle_missing_fiber():
    with pytest.raises(NoIntersectionError):
        energy_circle((0.1, 0.0), 1.0, Sink())


@given(phase_points())
@settings(max_examples=30)
def test_integrator_matches_closed_flow(x0):
    y = integrate(CopernicanH0(), x0, 1.0).samples[-1]
    np.testing.assert_allclose(y, flow_matrix(1.0) @ x0, atol=1e-9)


def test_integrator_long_time(rng):
    for _ in range(5):
        x0 = rng.uniform(-2, 2, 4)
        tr = integrate(CopernicanH0(), x0, 20.0, n_out=5)
        for t, y in zip(np.linspace(0, 20, 5), tr.samples):
            np.testing.assert_allclose(y, flow_matrix(t) @ x0, atol=1e-9)
        assert tr.energy_drift <= IntegratorConfig().energy_tol(float(CopernicanH0().value(x0)))


def test_integrator_zero_time():
    x0 = np.array([0.3, -0.2, 1.0, 0.5])
    np.testing.assert_array_equal(integrate(CopernicanH0(), x0, 0.0).samples[-1], x0)


@pytest.mark.parametrize("H", [CopernicanH0(), PerturbedHamiltonian(CUBIC)], ids=["h0", "cubic"])
def test_integrator_reversal(H, rng):
    for _ in range(5):
        x0 = np.array([*rng.uniform(0.5, 1.5, 2), *rng.uniform(-1, 1, 2)])
        y = integrate(H, x0, 3.0).samples[-1]
        back = integrate(H, y, -3.0).samples[-1]
        np.testing.assert_allclose(back, x0, atol=1e-8)


def test_integrator_fourth_order():
    x0 = np.array([1.0, 0.5, -0.3, 0.8])
    exact = flow_matrix(2.0) @ x0
    errs = [np.max(np.abs(integrate(CopernicanH0(), x0, 2.0, fixed_steps=n).samples[-1] - exact))
            for n in (20, 40, 80)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    np.testing.assert_allclose(orders, 4.0, atol=0.2)


def test_integrator_generic_field_path():
    # a Hamiltonian with no compiled kernel goes through the generic field route
    class Wrapped(PerturbedHamiltonian):
        kernel_spec = None

    x0 = np.array([1.2, 0.1, 0.3, -0.4])
    a = integrate(PerturbedHamiltonian(CUBIC), x0, 2.0).samples[-1]
    b = integrate(Wrapped(CUBIC), x0, 2.0).samples[-1]
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_figure_problem_oracle():
    prob = TwoBoostProblem(Q0, Q1, 0.2)
    res = shoot(prob)
    ref = [r.eta for r in find_roots(prob)]
    assert len(res.chords) == len(ref)
    np.testing.assert_allclose([ch.eta for ch in res.chords], ref, atol=1e-8)
    for ch in res.chords:
        assert ch.residuals["boundary"] <= BOUNDARY_TOL
        assert ch.residuals["energy"] <= ENERGY_TOL
        assert ch.residuals["ode"] <= ODE_TOL
        assert ch.kind == "shot"


def test_reconvergence_from_closed_form_chords():
    rng = np.random.default_rng(8)
    for _ in range(10):
        prob = random_problem(rng, c_range=(0.3, 2.0), q_max=1.5)
        ref = [r.eta for r in find_roots(prob)]
        seeds = [(psi + 1e-3, eta - 1e-3) for psi, eta in closed_form_seeds(prob)]
        got = [ch.eta for ch in shoot(prob, seeds=seeds).chords]
        np.testing.assert_allclose(got, ref, atol=1e-8)


def test_default_seed_layout():
    prob = TwoBoostProblem(Q0, Q1, 0.2)
    seeds = default_seeds(prob, n_psi=8)
    exact = closed_form_seeds(prob)
    assert seeds[:len(exact)] == exact
    assert (len(seeds) - len(exact)) % 8 == 0


def test_shoot_needs_seeds():
    with pytest.raises(ValueError):
        shoot(TwoBoostProblem(Q0, Q1, 0.2), seeds=[])


def test_failed_shoot_reports_diagnostics():
    res = shoot(TwoBoostProblem(Q0, Q1, 0.2), seeds=[(0.0, 40.0)], opts=ShootOptions(max_iter=1))
    assert res.chords == []
    assert any(d.get("message") == "no seed converged" for d in res.diagnostics)


def test_small_potential_linear_convergence():
    prob = TwoBoostProblem(Q0, Q1, 1.0)
    ref = np.array([r.eta for r in find_roots(prob)])
    errs = []
    for eps in (1e-1, 1e-2, 1e-3):
        got = shoot(prob, RadialPowerPotential(eps, 3.0, 1.0), seeds=closed_form_seeds(prob))
        assert len(got.chords) == len(ref)
        errs.append(np.abs(np.array([ch.eta for ch in got.chords]) - ref))
    errs = np.array(errs)
    slopes = np.log10(errs[:-1] / errs[1:])
    # one decade in eps gives close to one decade in eta
    assert np.all(slopes > 0.8) and np.all(slopes < 1.2)
    assert np.all(np.abs(slopes[-1] - 1.0) < 0.05)


@pytest.fixture(scope="module")
def cubic_comparison():
    prob = TwoBoostProblem(Q0, Q1, 1.0)
    spec = cutoff_spec(CUBIC, 1.0, Q0, Q1)
    return prob, spec, compare_crit_sets(prob, CUBIC, spec)


def test_cutoff_preserves_chords(cubic_comparison):
    _, _, cmp = cubic_comparison
    assert cmp.matched
    assert cmp.only_H == [] and cmp.only_H1 == []
    assert cmp.index_mismatch == []
    for a, b in cmp.matched:
        assert a.eta == pytest.approx(b.eta, abs=1e-6)
        assert a.certified() and b.certified()


def test_shot_chords_inside_box_and_plateau(cubic_comparison):
    prob, spec, cmp = cubic_comparison
    box = chord_radius_bound(CUBIC, 1.0, Q0, Q1)
    for pair in cmp.matched:
        for ch in pair:
            assert box.contains(ch.samples)
            assert np.all(phi_eval(spec, ch.samples) == 1.0)


def test_shot_action_sign(cubic_comparison):
    _, _, cmp = cubic_comparison
    for ch, _ in cmp.matched:
        # contact type along the chord: dH(p d/dp) > 0
        if np.all(ch.hamiltonian.liouville(ch.samples) > 0):
            assert sign_action_check(ch).consistent


def test_compare_with_zero_potential():
    prob = TwoBoostProblem(Q0, Q1, 0.5)
    spec = cutoff_spec(CUBIC, 0.5, Q0, Q1)
    cmp = compare_crit_sets(prob, ZeroPotential(), spec, seeds=closed_form_seeds(prob),
                            with_index=False)
    ref = [r.eta for r in find_roots(prob)]
    assert cmp.only_H == [] and cmp.only_H1 == []
    np.testing.assert_allclose([a.eta for a, _ in cmp.matched], ref, atol=1e-8)
    np.testing.assert_allclose([b.eta for _, b in cmp.matched], ref, atol=1e-8)
