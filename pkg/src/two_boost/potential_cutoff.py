"""Decaying potentials, chord confinement bounds and the compactly
supported cutoff H1 = H0 - phi V whose chords at energy c coincide with
those of H0 - V.

The cutoff is phi = chi0(r) chi1(H0), with chi0(r) = chi(beta (r - R1))
and chi1 = chi(H0 - sup V - c), built from one fixed smooth step chi.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .hamiltonians import (GridSpec, Hamiltonian, PerturbationCandidate, Potential,
                           class_H_check, h0_eval, h0_grad, h0_polar)
from .symplectic_core import DomainError, to_polar


class HypothesisError(ValueError):
    """Inputs fall outside the range where the confinement argument applies."""


# ---------------------------------------------------------------------------
# Smooth step


def chi(x):
    """1 - (6x^5 - 15x^4 + 10x^3) on [0, 1], 1 below and 0 above."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return 1.0 - x ** 3 * (10.0 + x * (-15.0 + 6.0 * x))


def dchi(x):
    """chi'(x) = -30 x^2 (1 - x)^2 inside (0, 1), zero elsewhere."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    return np.where(inside, -30.0 * x ** 2 * (1.0 - x) ** 2, 0.0)


def d2chi(x):
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x < 1)
    return np.where(inside, -60.0 * x * (1.0 - x) * (1.0 - 2.0 * x), 0.0)


CHI_SLOPE_MAX = 15.0 / 8.0


@dataclass(frozen=True)
class SmoothStep:
    """The fixed C^2 step used for both cutoff factors."""

    name: str = "quintic"
    slope_max: float = CHI_SLOPE_MAX

    def __call__(self, x):
        return chi(x)

    def derivative(self, x):
        return dchi(x)

    def second_derivative(self, x):
        return d2chi(x)


# ---------------------------------------------------------------------------
# Potentials with power decay


class DecayPotential(Potential):
    """Potential with claimed decay data (a, alpha, r0).

    Beyond r0 the potential should satisfy V <= a / r^alpha and
    dV/dr >= -a alpha / r^(alpha + 1).  Callables act on polar ``(r, theta)``.
    """

    def __init__(self, V: Callable, dVdr: Callable, dVdtheta: Optional[Callable],
                 a: float, alpha: float, r0: float):
        if not a > 0 or not r0 > 0:
            raise ValueError("a and r0 must be positive")
        if alpha < 2:
            raise HypothesisError("decay exponents below 2 are not supported")
        self._V, self._dVdr, self._dVdtheta = V, dVdr, dVdtheta
        self.a, self.alpha, self.r0 = float(a), float(alpha), float(r0)

    def V(self, r, theta):
        return self._V(r, theta)

    def dVdr(self, r, theta):
        return self._dVdr(r, theta)

    def dVdtheta(self, r, theta):
        if self._dVdtheta is None:
            return np.zeros_like(np.asarray(r, dtype=float))
        return self._dVdtheta(r, theta)

    def sup_estimate(self, n_r: int = 257, n_theta: int = 64) -> float:
        """Grid maximum over r <= r0 combined with the tail bound a / r0^alpha."""
        r = np.linspace(0.0, self.r0, n_r)
        th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
        R, T = np.meshgrid(r, th, indexing="ij")
        q = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
        return float(max(np.max(self.value_q(q)), self.a / self.r0 ** self.alpha))

    def sup_on_disc(self, radius: float, n_r: int = 513, n_theta: int = 64) -> float:
        r = np.linspace(0.0, radius, n_r)
        th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
        R, T = np.meshgrid(r, th, indexing="ij")
        q = np.stack([R * np.cos(T), R * np.sin(T)], axis=-1)
        return float(max(np.max(self.value_q(q)), self.sup_estimate()))


class RadialPowerPotential(DecayPotential):
    """V = a / r^alpha for r >= r0, continued inside by an even quadratic in r^2.

    The inner piece k (A + B s + C s^2), s = (r/r0)^2, k = a r0^-alpha, matches
    value, slope and curvature at r0, so V is C^2, radial, positive and
    decreasing, with maximum k A at the origin.
    """

    def __init__(self, a: float, alpha: float, r0: float):
        super().__init__(None, None, None, a, alpha, r0)
        al = self.alpha
        self.k = self.a * self.r0 ** (-al)
        self.C = al * (al + 2.0) / 8.0
        self.B = -al * (al + 4.0) / 4.0
        self.A = 1.0 + (al * al + 6.0 * al) / 8.0

    def V(self, r, theta=None):
        r = np.asarray(r, dtype=float)
        s = (r / self.r0) ** 2
        inner = self.k * (self.A + s * (self.B + self.C * s))
        # the power law is only used for r >= r0
        outer = self.a * np.maximum(r, self.r0) ** (-self.alpha)
        return np.where(r < self.r0, inner, outer)

    def dVdr(self, r, theta=None):
        r = np.asarray(r, dtype=float)
        s = (r / self.r0) ** 2
        inner = self.k * (self.B + 2.0 * self.C * s) * 2.0 * r / self.r0 ** 2
        outer = -self.a * self.alpha * np.maximum(r, self.r0) ** (-self.alpha - 1.0)
        return np.where(r < self.r0, inner, outer)

    def value_q(self, q):
        q = np.asarray(q, dtype=float)
        return self.V(np.hypot(q[..., 0], q[..., 1]))

    def grad_q(self, q):
        q = np.asarray(q, dtype=float)
        rr = q[..., 0] ** 2 + q[..., 1] ** 2
        s = rr / self.r0 ** 2
        inner = self.k * (self.B + 2.0 * self.C * s) * 2.0 / self.r0 ** 2
        outer = -self.a * self.alpha * np.maximum(rr, self.r0 ** 2) ** (-0.5 * self.alpha - 1.0)
        return np.where(s < 1.0, inner, outer)[..., None] * q

    def sup_estimate(self, n_r: int = 257, n_theta: int = 64) -> float:
        return float(self.k * self.A)

    def sup_on_disc(self, radius, n_r=513, n_theta=64) -> float:
        return float(self.k * self.A)

    def kernel_params(self) -> np.ndarray:
        return np.array([self.a, self.alpha, self.r0, 0.0, 0.0, 0.0, 0.0])

    def __repr__(self):
        return f"RadialPowerPotential(a={self.a}, alpha={self.alpha}, r0={self.r0})"


def parse_potential(text: str, r0: float = 1.0) -> RadialPowerPotential:
    """Parse ``'a/r^alpha'`` with decimal literals, e.g. ``'0.1/r^3'``."""
    t = text.replace(" ", "")
    try:
        num, rest = t.split("/", 1)
        if not rest.startswith("r^"):
            raise ValueError
        a = float(num)
        alpha = float(rest[2:])
    except ValueError:
        raise ValueError(f"potential must look like 'a/r^alpha', got {text!r}") from None
    return RadialPowerPotential(a, alpha, r0)


@dataclass
class DecayReport:
    ok: bool
    violations: list = field(default_factory=list)
    literal_slope_bound_holds: bool = True


def verify_decay(V: DecayPotential, c: float, n_r: int = 400, n_theta: int = 32,
                 r_factor: float = 20.0) -> DecayReport:
    """Sample the decay hypotheses on r in (r0, r_factor r0] and V >= 0 everywhere.

    ``literal_slope_bound_holds`` reports the weaker-looking variant
    dV/dr >= -a / r^(alpha+1), which many power laws violate; it is
    informational only.
    """
    viol = []
    if V.alpha == 2 and not V.a < c * c / 4:
        viol.append({"hypothesis": "a < c^2/4 for alpha = 2", "value": V.a})
    r = np.linspace(0.0, r_factor * V.r0, n_r)
    th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    R, T = np.meshgrid(r, th, indexing="ij")
    vals = V.V(R, T)
    if np.min(vals) < 0:
        i = np.unravel_index(np.argmin(vals), vals.shape)
        viol.append({"hypothesis": "V >= 0", "r": float(R[i]), "theta": float(T[i])})
    out = R > V.r0
    bound = V.a * np.where(out, R, 1.0) ** (-V.alpha)
    slope = V.dVdr(R, T)
    sbound = -V.a * V.alpha * np.where(out, R, 1.0) ** (-V.alpha - 1.0)
    tol = 1e-12
    bad = out & (vals > bound * (1 + tol) + tol)
    if bad.any():
        i = np.argwhere(bad)[0]
        viol.append({"hypothesis": "V <= a/r^alpha", "r": float(R[tuple(i)])})
    bad = out & (slope < sbound * (1 + tol) - tol)
    if bad.any():
        i = np.argwhere(bad)[0]
        viol.append({"hypothesis": "dV/dr >= -a alpha / r^(alpha+1)", "r": float(R[tuple(i)])})
    literal = not np.any(out & (slope < -V.a * np.where(out, R, 1.0) ** (-V.alpha - 1.0) - tol))
    return DecayReport(ok=not viol, violations=viol, literal_slope_bound_holds=literal)


def _require_hypotheses(V: DecayPotential, c: float):
    if not c > 0:
        raise ValueError("energy c must be positive")
    if V.alpha == 2 and not V.a < c * c / 4:
        raise HypothesisError(
            f"alpha = 2 requires a in (0, c^2/4) = (0, {c * c / 4:g}); got a = {V.a:g}")
    rep = verify_decay(V, c)
    if not rep.ok:
        raise HypothesisError(f"decay hypotheses fail: {rep.violations}")


# ---------------------------------------------------------------------------
# Confinement of chords


@dataclass(frozen=True)
class ChordBox:
    R0: float
    pr_max: float
    ptheta_max: float
    r1: float

    def contains(self, xs, tol: float = 1e-9) -> bool:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        r = np.hypot(xs[:, 0], xs[:, 1])
        safe = np.where(r > 0, r, 1.0)
        pr = (xs[:, 0] * xs[:, 2] + xs[:, 1] * xs[:, 3]) / safe
        pt = xs[:, 0] * xs[:, 3] - xs[:, 1] * xs[:, 2]
        return bool(np.all(r <= self.R0 + tol) and np.all(np.abs(pr) <= self.pr_max + tol)
                    and np.all(np.abs(pt) <= self.ptheta_max + tol))


def chord_radius_bound(V: DecayPotential, c: float, q0, q1) -> ChordBox:
    """Radius and momentum box containing every chord of H0 - V at energy c."""
    _require_hypotheses(V, c)
    a, al, r0 = V.a, V.alpha, V.r0
    if al > 2:
        r1 = max(r0, math.sqrt(c) / 2, (a * al / c ** 2) ** (1.0 / (al - 2)))
    else:
        r1 = max(r0, math.sqrt(a / (c - math.sqrt(2 * a))))
    R0 = max(float(np.linalg.norm(q0)), float(np.linalg.norm(q1)), r1)
    supv = V.sup_on_disc(R0)
    pr = math.sqrt(R0 ** 2 + 2 * (supv + c))
    return ChordBox(R0=R0, pr_max=pr, ptheta_max=R0 * (R0 + pr), r1=r1)


# ---------------------------------------------------------------------------
# Cutoff


@dataclass(frozen=True)
class CutoffSpec:
    R1: float
    beta: float
    supV: float
    c: float
    step: SmoothStep = SmoothStep()

    @property
    def outer_radius(self) -> float:
        return self.R1 + 1.0 / self.beta

    def chi0(self, r):
        return self.step(self.beta * (np.asarray(r, dtype=float) - self.R1))

    def dchi0(self, r):
        return self.beta * self.step.derivative(self.beta * (np.asarray(r, dtype=float) - self.R1))

    def chi1(self, e):
        return self.step(np.asarray(e, dtype=float) - self.supV - self.c)

    def dchi1(self, e):
        return self.step.derivative(np.asarray(e, dtype=float) - self.supV - self.c)

    def momentum_radius(self) -> float:
        """|p| bound on the set {H0 <= supV + c + 1, r <= R1 + 1/beta}."""
        rm = self.outer_radius
        return rm + math.sqrt(2 * (self.supV + self.c + 1) + rm * rm)


def cutoff_spec(V: DecayPotential, c: float, q0, q1) -> CutoffSpec:
    """Radius R1, slope beta and sup V for the cutoff of H0 - V at energy c."""
    _require_hypotheses(V, c)
    a, al, r0 = V.a, V.alpha, V.r0
    qm = max(float(np.linalg.norm(q0)), float(np.linalg.norm(q1)))
    if al > 2:
        R1 = max(qm, r0, math.sqrt(c) / 2, (8 * a * al / c ** 2) ** (1.0 / (al - 2)))
        beta = (al - 2) / (2 * R1)
    else:
        sa = math.sqrt(a)
        R1 = max(qm, r0, (c + 2 * sa) / (2 * math.sqrt(c - 2 * sa)))
        beta = ((c + 2 * sa) ** 2 - 16 * a) / (8 * a * R1)
    if not beta > 0:
        raise RuntimeError(f"cutoff slope beta = {beta} is not positive")
    return CutoffSpec(R1=float(R1), beta=float(beta), supV=V.sup_estimate(), c=float(c))


def _phi_parts(spec: CutoffSpec, x):
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    e = h0_eval(x)
    return r, e, spec.chi0(r), spec.chi1(e)


def phi_eval(spec: CutoffSpec, x):
    """phi = chi0(r) chi1(H0) in [0, 1]."""
    _, _, c0, c1 = _phi_parts(spec, x)
    out = c0 * c1
    return float(out) if np.ndim(out) == 0 else out


def phi_grad(spec: CutoffSpec, x):
    """Cartesian gradient of phi."""
    x = np.asarray(x, dtype=float)
    r, e, c0, c1 = _phi_parts(spec, x)
    d0 = spec.dchi0(r)
    d1 = spec.dchi1(e)
    g = (c0 * d1)[..., None] * h0_grad(x)
    safe = np.where(r > 0, r, 1.0)
    g[..., :2] += (c1 * d0 / safe)[..., None] * x[..., :2]
    return g


class CutoffHamiltonian(Hamiltonian):
    """H1 = H0 - phi V."""

    def __init__(self, spec: CutoffSpec, potential: Potential):
        self.spec = spec
        self.potential = potential

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return h0_eval(x) - phi_eval(self.spec, x) * self.potential.value_q(x[..., :2])

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        v = self.potential.value_q(x[..., :2])
        ph = phi_eval(self.spec, x)
        g = h0_grad(x) - v[..., None] * phi_grad(self.spec, x)
        g[..., :2] -= np.asarray(ph)[..., None] * self.potential.grad_q(x[..., :2])
        return g

    @property
    def kernel_spec(self):
        ks = getattr(self.potential, "kernel_params", None)
        if ks is None:
            return None
        p = ks()
        p[3:] = [self.spec.R1, self.spec.beta, self.spec.supV, self.spec.c]
        return (2, p)


def h1_eval(spec: CutoffSpec, V: Potential, x) -> float:
    return CutoffHamiltonian(spec, V).value(x)


def h1_vector_field(spec: CutoffSpec, V: Potential, x) -> np.ndarray:
    """Polar components (r', theta', p_r', p_theta') of X_H1, H1 = H0 - phi V."""
    r, th, pr, pt = to_polar(x)
    e = h0_polar(r, pr, pt)
    c0, c1 = float(spec.chi0(r)), float(spec.chi1(e))
    d0, d1 = float(spec.dchi0(r)), float(spec.dchi1(e))
    v = float(V.V(r, th))
    vr = float(V.dVdr(r, th))
    vt = float(V.dVdtheta(r, th))
    phi = c0 * c1
    damp = 1.0 - v * c0 * d1
    return np.array([
        pr * damp,
        (pt / r ** 2 - 1.0) * damp,
        pt ** 2 / r ** 3 * damp + v * d0 * c1 + phi * vr,
        phi * vt,
    ])


def bracket_r(spec: CutoffSpec, V: Potential, r, theta, p_r, p_theta):
    """{H1, r} = p_r (1 - V chi0 chi1')."""
    e = h0_polar(r, p_r, p_theta)
    return p_r * (1.0 - V.V(r, theta) * spec.chi0(r) * spec.dchi1(e))


def bracket_rr(spec: CutoffSpec, V: Potential, r, theta, p_theta):
    """{H1, {H1, r}} at p_r = 0: (p_theta^2/r^3 + phi V_r + V dphi/dr)(1 - V chi0 chi1')."""
    e = h0_polar(r, 0.0, p_theta)
    c0, c1 = spec.chi0(r), spec.chi1(e)
    d0, d1 = spec.dchi0(r), spec.dchi1(e)
    v, vr = V.V(r, theta), V.dVdr(r, theta)
    dphi_dr = d0 * c1 - (p_theta ** 2 / r ** 3) * c0 * d1
    return (p_theta ** 2 / r ** 3 + c0 * c1 * vr + v * dphi_dr) * (1.0 - v * c0 * d1)


@dataclass
class TrapReport:
    passed: bool
    min_margin: float
    n_points: int
    violations: list = field(default_factory=list)
    violations_only_positive_ptheta: bool = True
    support_violations: list = field(default_factory=list)


def trap_set_check(spec: CutoffSpec, V: Potential, n_r: int = 256, n_theta: int = 64,
                   max_witnesses: int = 5) -> TrapReport:
    """Check {H1,{H1,r}} > 0 where H1 = c, {H1,r} = 0 and 0 < chi0 < 1.

    {H1, r} vanishes exactly when p_r = 0, and on H1 = c with p_r = 0 the
    energy H0 equals c + chi0 V <= sup V + c, so chi1 = 1 there.  The level
    set is therefore sampled exactly: for each (r, theta) in the transition
    band both roots p_theta of p_theta^2/(2r^2) - p_theta = c + chi0 V are
    taken.  No sign of p_theta is assumed.

    The plateau and vanishing claims of chi0 are also sampled; a failure of
    either is reported in ``support_violations``.
    """
    lo, hi = sorted((spec.R1, spec.R1 + 1.0 / spec.beta))
    # only a wrong-signed beta moves the band below r = 0; keep samples in the plane
    lo = max(lo, 1e-3 * hi)
    r = np.linspace(lo, hi, n_r + 2)[1:-1]
    th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    R, T = np.meshgrid(r, th, indexing="ij")
    e = spec.c + spec.chi0(R) * V.V(R, T)
    disc = np.sqrt(1.0 + 2.0 * e / R ** 2)
    violations = []
    margins = []
    for sgn in (1.0, -1.0):
        pt = R ** 2 * (1.0 + sgn * disc)
        # on the sampled set chi1 must be identically 1
        m = bracket_rr(spec, V, R, T, pt)
        margins.append(m)
        bad = ~(m > 0)
        for i in np.argwhere(bad)[:max_witnesses]:
            i = tuple(i)
            violations.append({"r": float(R[i]), "theta": float(T[i]), "p_r": 0.0,
                               "p_theta": float(pt[i]), "bracket": float(m[i])})
    # plateau and support claims of chi0
    support = []
    probe_in = np.linspace(0.0, spec.R1, 64)
    probe_out = np.linspace(spec.R1 + 1.0 / spec.beta, spec.R1 + 4.0 / abs(spec.beta), 64)
    for rr in probe_in:
        if spec.chi0(rr) != 1.0:
            support.append({"claim": "chi0 = 1 for r <= R1", "r": float(rr),
                            "chi0": float(spec.chi0(rr))})
            break
    for rr in probe_out:
        if rr >= 0 and spec.chi0(rr) != 0.0:
            support.append({"claim": "chi0 = 0 for r >= R1 + 1/beta", "r": float(rr),
                            "chi0": float(spec.chi0(rr))})
            break
    if not spec.beta > 0:
        support.append({"claim": "beta > 0", "beta": spec.beta})
    mins = float(min(np.min(m) for m in margins))
    only_pos = all(v["p_theta"] > 0 for v in violations)
    return TrapReport(passed=not violations and not support, min_margin=mins,
                      n_points=2 * R.size, violations=violations,
                      violations_only_positive_ptheta=only_pos,
                      support_violations=support)


def cutoff_candidate(spec: CutoffSpec, V: Potential) -> PerturbationCandidate:
    """phi V + c as a candidate perturbation with its compact support box."""

    def h(x):
        x = np.asarray(x, dtype=float)
        return spec.c + phi_eval(spec, x) * V.value_q(x[..., :2])

    def grad(x):
        x = np.asarray(x, dtype=float)
        v = V.value_q(x[..., :2])
        g = v[..., None] * phi_grad(spec, x)
        g[..., :2] += np.asarray(phi_eval(spec, x))[..., None] * V.grad_q(x[..., :2])
        return g

    return PerturbationCandidate(h=h, gradient=grad, support_radius=spec.outer_radius,
                                 momentum_radius=spec.momentum_radius())


def cutoff_membership(spec: CutoffSpec, V: Potential, grid: GridSpec = GridSpec()):
    return class_H_check(cutoff_candidate(spec, V), grid)
