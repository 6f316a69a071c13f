"""Hamiltonians on T*R^2: the rotating-frame H0, the kinetic Hamiltonian,
the scaled family H_delta, potential perturbations H0 - V, and a sampled
membership test for admissible perturbations.

Every Hamiltonian exposes ``value``, ``grad`` and ``field`` acting on
Cartesian arrays of shape ``(..., 4)`` ordered ``(q1, q2, p1, p2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .symplectic_core import J4, DomainError, flow_matrix, to_polar


def _split(x):
    x = np.asarray(x, dtype=float)
    return x[..., 0], x[..., 1], x[..., 2], x[..., 3]


def h0_eval(x) -> np.ndarray:
    """H0 = (p1^2 + p2^2)/2 + p1 q2 - p2 q1."""
    q1, q2, p1, p2 = _split(x)
    return 0.5 * (p1 * p1 + p2 * p2) + p1 * q2 - p2 * q1


def h0_polar(r, p_r, p_theta):
    """H0 in polar coordinates: p_r^2/2 + p_theta^2/(2 r^2) - p_theta.

    With theta counterclockwise and p_theta = q1 p2 - q2 p1 the rotation
    term p1 q2 - p2 q1 equals -p_theta.
    """
    return 0.5 * p_r ** 2 + 0.5 * p_theta ** 2 / r ** 2 - p_theta


def h0_grad(x) -> np.ndarray:
    """Gradient (dH0/dq, dH0/dp)."""
    q1, q2, p1, p2 = _split(x)
    return np.stack([-p2, p1, p1 + q2, p2 - q1], axis=-1)


def h0_vector_field(x) -> np.ndarray:
    """X_H0 = (p1 + q2, p2 - q1, p2, -p1)."""
    q1, q2, p1, p2 = _split(x)
    return np.stack([p1 + q2, p2 - q1, p2, -p1], axis=-1)


def liouville_pairing(x) -> np.ndarray:
    """dH0 applied to the Liouville field p d/dp; equals |p|^2/2 + H0."""
    q1, q2, p1, p2 = _split(x)
    return p1 * p1 + p2 * p2 + q2 * p1 - q1 * p2


class Hamiltonian:
    """Base class.  Subclasses implement ``value`` and ``grad``."""

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def field(self, x):
        return np.asarray(self.grad(x)) @ J4.T

    def liouville(self, x):
        """dH(p d/dp), the pairing that decides contact type."""
        x = np.asarray(x, dtype=float)
        return np.sum(self.grad(x)[..., 2:] * x[..., 2:], axis=-1)

    def linear_flow(self, t) -> Optional[np.ndarray]:
        """Closed-form linearised flow when the Hamiltonian is quadratic."""
        return None

    kernel_spec = None


class CopernicanH0(Hamiltonian):
    """Free motion seen from a uniformly rotating frame."""

    def value(self, x):
        return h0_eval(x)

    def grad(self, x):
        return h0_grad(x)

    def field(self, x):
        return h0_vector_field(x)

    def linear_flow(self, t):
        return flow_matrix(t)

    kernel_spec = (0, np.zeros(7))


class FreeHamiltonian(Hamiltonian):
    """Kinetic Hamiltonian |p|^2 / 2."""

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sum(x[..., 2:] ** 2, axis=-1)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros_like(x)
        g[..., 2:] = x[..., 2:]
        return g

    def linear_flow(self, t):
        m = np.eye(4)
        m[:2, 2:] = t * np.eye(2)
        return m


@dataclass(frozen=True)
class ScaledHamiltonian(Hamiltonian):
    """H_delta = |p|^2/2 + delta (p1 q2 - p2 q1) = delta * H0(sqrt(delta) q, p / sqrt(delta))."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    def value(self, x):
        q1, q2, p1, p2 = _split(x)
        return 0.5 * (p1 * p1 + p2 * p2) + self.delta * (p1 * q2 - p2 * q1)

    def grad(self, x):
        q1, q2, p1, p2 = _split(x)
        d = self.delta
        return np.stack([-d * p2, d * p1, p1 + d * q2, p2 - d * q1], axis=-1)

    def linear_flow(self, t):
        # conjugate the H0 flow at time delta t by phi_delta
        s = np.sqrt(self.delta)
        S = np.diag([s, s, 1.0 / s, 1.0 / s])
        return np.linalg.inv(S) @ flow_matrix(self.delta * t) @ S


def scaling_symplecto(x, delta):
    """phi_delta(q, p) = (sqrt(delta) q, p / sqrt(delta))."""
    x = np.asarray(x, dtype=float)
    s = np.sqrt(delta)
    out = np.array(x, copy=True)
    out[..., :2] *= s
    out[..., 2:] /= s
    return out


class Potential:
    """A potential V(r, theta) on the plane with analytic derivatives.

    Subclasses provide ``V``, ``dVdr`` and ``dVdtheta`` in polar form.  The
    Cartesian gradient defaults to the chain rule and may be overridden
    where a formula smooth at the origin exists.
    """

    def V(self, r, theta):
        raise NotImplementedError

    def dVdr(self, r, theta):
        raise NotImplementedError

    def dVdtheta(self, r, theta):
        return np.zeros_like(np.asarray(r, dtype=float))

    def value_q(self, q):
        q = np.asarray(q, dtype=float)
        return self.V(np.hypot(q[..., 0], q[..., 1]), np.arctan2(q[..., 1], q[..., 0]))

    def grad_q(self, q):
        q = np.asarray(q, dtype=float)
        r = np.hypot(q[..., 0], q[..., 1])
        th = np.arctan2(q[..., 1], q[..., 0])
        vr = self.dVdr(r, th)
        vt = self.dVdtheta(r, th)
        c, s = q[..., 0] / r, q[..., 1] / r
        return np.stack([vr * c - vt * s / r, vr * s + vt * c / r], axis=-1)


class ZeroPotential(Potential):
    def V(self, r, theta):
        return np.zeros_like(np.asarray(r, dtype=float))

    def dVdr(self, r, theta):
        return np.zeros_like(np.asarray(r, dtype=float))

    def value_q(self, q):
        return np.zeros(np.shape(q)[:-1])

    def grad_q(self, q):
        return np.zeros(np.shape(q))

    def kernel_params(self) -> np.ndarray:
        # a = 0 switches the power law off in the compiled field
        return np.array([0.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0])


@dataclass(frozen=True)
class CompactBumpPotential(Potential):
    """Radial bump ``height * (1 - (r/radius)^2)^3`` for r < radius, zero beyond.

    Nonnegative, C^2 and compactly supported; a convenient test member of the
    admissible perturbation class.
    """

    height: float
    radius: float

    def V(self, r, theta):
        u = np.clip(1.0 - (np.asarray(r, dtype=float) / self.radius) ** 2, 0.0, None)
        return self.height * u ** 3

    def dVdr(self, r, theta):
        r = np.asarray(r, dtype=float)
        u = np.clip(1.0 - (r / self.radius) ** 2, 0.0, None)
        return -6.0 * self.height * u ** 2 * r / self.radius ** 2

    def value_q(self, q):
        q = np.asarray(q, dtype=float)
        u = np.clip(1.0 - np.sum(q ** 2, axis=-1) / self.radius ** 2, 0.0, None)
        return self.height * u ** 3

    def grad_q(self, q):
        q = np.asarray(q, dtype=float)
        u = np.clip(1.0 - np.sum(q ** 2, axis=-1) / self.radius ** 2, 0.0, None)
        return (-6.0 * self.height * u ** 2 / self.radius ** 2)[..., None] * q


class PerturbedHamiltonian(Hamiltonian):
    """H = H0 - V for a potential V."""

    def __init__(self, potential: Potential):
        self.potential = potential

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return h0_eval(x) - self.potential.value_q(x[..., :2])

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        g = h0_grad(x)
        g[..., :2] -= self.potential.grad_q(x[..., :2])
        return g

    @property
    def kernel_spec(self):
        ks = getattr(self.potential, "kernel_params", None)
        return None if ks is None else (1, ks())


def perturbed_vector_field(H: PerturbedHamiltonian, x) -> np.ndarray:
    """Polar components (r', theta', p_r', p_theta') of X_H for H = H0 - V.

    Returns ``(p_r, p_theta/r^2 - 1, p_theta^2/r^3 + dV/dr, dV/dtheta)``.
    Raises `DomainError` at r = 0.
    """
    r, th, pr, pt = to_polar(x)
    V = H.potential
    return np.array([pr, pt / r ** 2 - 1.0,
                     pt ** 2 / r ** 3 + float(V.dVdr(r, th)),
                     float(V.dVdtheta(r, th))])


def polar_to_cartesian_tangent(x, v_polar) -> np.ndarray:
    """Push a polar tangent vector at the Cartesian point x forward to Cartesian."""
    r, th, pr, pt = to_polar(x)
    dr, dth, dpr, dpt = v_polar
    c, s = np.cos(th), np.sin(th)
    dq = np.array([dr * c - r * s * dth, dr * s + r * c * dth])
    # p = pr e_r + (pt/r) e_th with e_r = (c, s), e_th = (-s, c)
    a = pt / r
    da = dpt / r - pt * dr / r ** 2
    dp = np.array([dpr * c - pr * s * dth - da * s - a * c * dth,
                   dpr * s + pr * c * dth + da * c - a * s * dth])
    return np.concatenate([dq, dp])


# ---------------------------------------------------------------------------
# Sampled membership test for admissible perturbations h.


@dataclass(frozen=True)
class PerturbationCandidate:
    """A candidate h on T*R^2 with a claimed compact support box for dh.

    ``h`` and ``gradient`` act on arrays of shape ``(..., 4)``.  Outside
    ``|q| <= support_radius`` and ``|p| <= momentum_radius`` the claim is
    that dh vanishes.  ``momentum_radius = inf`` claims support over the
    q-disc only, i.e. on a cylinder; h = c + V(q) is of this kind.
    """

    h: Callable
    gradient: Callable
    support_radius: float
    momentum_radius: float = math.inf


@dataclass(frozen=True)
class GridSpec:
    """Polar sampling of the dilated support box.

    Positions use ``n_r`` radii and ``n_theta`` angles; momenta use ``n_p``
    magnitudes and ``n_psi`` directions.
    """

    n_r: int = 64
    n_theta: int = 64
    n_p: int = 64
    n_psi: int = 4
    dilation: float = 1.5
    grad_tol: float = 1e-10


@dataclass
class MembershipReport:
    member: bool
    c_estimate: float
    violations: list = field(default_factory=list)
    n_samples: int = 0
    note: str = ""
    compact_support: bool = True


C_MARGIN = 1e-9


def sample_box(r_max, p_max, grid: GridSpec) -> np.ndarray:
    """Cartesian sample points covering |q| <= r_max, |p| <= p_max."""
    r = np.linspace(0.0, r_max, grid.n_r)
    th = np.linspace(0.0, 2 * np.pi, grid.n_theta, endpoint=False)
    pm = np.linspace(0.0, p_max, grid.n_p)
    psi = np.linspace(0.0, 2 * np.pi, grid.n_psi, endpoint=False) + 0.1
    R, TH, PM, PS = np.meshgrid(r, th, pm, psi, indexing="ij")
    pts = np.stack([R * np.cos(TH), R * np.sin(TH),
                    PM * np.cos(PS + TH), PM * np.sin(PS + TH)], axis=-1)
    return pts.reshape(-1, 4)


def class_H_check(cand: PerturbationCandidate, grid: GridSpec = GridSpec(),
                  max_witnesses: int = 5) -> MembershipReport:
    """Check h > 0, h - dh(p d/dp) > 0 and the support claim on a grid.

    ``c_estimate`` is the grid minimum of h - dh(p d/dp) minus a safety
    margin; a non-positive estimate makes the candidate a non-member.
    """
    cylinder = not math.isfinite(cand.momentum_radius)
    r_max = grid.dilation * cand.support_radius
    # a cylinder claim has no momentum scale of its own; sample |p| as far as |q|
    p_max = grid.dilation * (max(1.0, cand.support_radius) if cylinder else cand.momentum_radius)
    pts = sample_box(r_max, p_max, grid)
    h = np.asarray(cand.h(pts), dtype=float) * np.ones(len(pts))
    g = np.asarray(cand.gradient(pts), dtype=float) * np.ones((len(pts), 4))
    gap = h - np.sum(g[:, 2:] * pts[:, 2:], axis=1)
    outside = np.hypot(pts[:, 0], pts[:, 1]) > cand.support_radius
    if not cylinder:
        outside |= np.hypot(pts[:, 2], pts[:, 3]) > cand.momentum_radius
    gnorm = np.linalg.norm(g, axis=1)

    violations = []

    def witness(name, mask, values):
        idx = np.flatnonzero(mask)
        for i in idx[:max_witnesses]:
            violations.append({"predicate": name, "point": pts[i].tolist(),
                               "value": float(values[i])})

    witness("h > 0", ~(h > 0), h)
    witness("h - dh(p dp) > 0", ~(gap > 0), gap)
    witness("dh = 0 outside support", outside & ~(gnorm < grid.grad_tol), gnorm)

    c_est = float(np.min(gap)) - C_MARGIN
    if c_est <= 0 and not any(v["predicate"].startswith("h - dh") for v in violations):
        i = int(np.argmin(gap))
        violations.append({"predicate": "c_estimate > 0", "point": pts[i].tolist(),
                           "value": c_est})
    note = ("beyond the grid dh vanishes by the support claim, so h is constant "
            "there and h - dh(p dp) equals that constant, already sampled on the "
            "outer shell")
    if cylinder:
        note = ("support claimed over |q| <= R for all p: dh vanishes outside a "
                "cylinder, not a compact set; " + note)
    return MembershipReport(member=not violations, c_estimate=c_est,
                            violations=violations, n_samples=len(pts), note=note,
                            compact_support=not cylinder)
