"""Closed-form chords of the rotating-frame Hamiltonian H0 at energy c.

A chord from the fiber over q0 to the fiber over q1 with multiplier eta
corresponds to a root of the scalar function

    f(eta) = -c eta^2 + eta q1^T R(eta + pi/2) q0 + (|q0|^2 + |q1|^2)/2
             - q1^T R(eta) q0,

and the chord itself is linear in (q0, q1) with coefficients built from
rotations.  This module isolates the roots, reconstructs and certifies the
chords, and implements the counting statements and the delta-scaling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .hamiltonians import CopernicanH0, FreeHamiltonian, h0_eval, h0_vector_field
from .symplectic_core import DomainError, flow_matrix, rotation, rotation_batch

ROOT_BRACKET_TOL = 1e-12
N_CHORD_SAMPLES = 256
BOUNDARY_TOL = 1e-10
ENERGY_TOL = 1e-8
ODE_TOL = 1e-6
PAIR_TOL = 1e-6


class DegenerateProblemError(RuntimeError):
    """Raised when an operation needs non-degenerate roots but finds one."""


@dataclass(frozen=True)
class TwoBoostProblem:
    """Endpoints q0, q1 in the plane and an energy c > 0."""

    q0: tuple
    q1: tuple
    c: float

    def __post_init__(self):
        q0 = tuple(float(v) for v in self.q0)
        q1 = tuple(float(v) for v in self.q1)
        if len(q0) != 2 or len(q1) != 2:
            raise ValueError("endpoints must be planar")
        if not np.all(np.isfinite(q0 + q1)):
            raise ValueError("endpoints must be finite")
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError("energy c must be positive")
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "q1", q1)
        object.__setattr__(self, "c", float(self.c))

    @property
    def q0a(self) -> np.ndarray:
        return np.array(self.q0)

    @property
    def q1a(self) -> np.ndarray:
        return np.array(self.q1)

    def nudged(self, eps: float) -> "TwoBoostProblem":
        """Same endpoints at energy c + eps."""
        return TwoBoostProblem(self.q0, self.q1, self.c + eps)

    def polar_data(self) -> tuple:
        """(|q0|, |q1|, theta) with theta in [0, 2 pi) the counterclockwise angle from q0 to q1."""
        q0, q1 = self.q0a, self.q1a
        dot = q1 @ q0
        cross = q1[1] * q0[0] - q1[0] * q0[1]
        return (float(np.linalg.norm(q0)), float(np.linalg.norm(q1)),
                float(math.atan2(cross, dot) % (2 * math.pi)))

    @property
    def derivative_tol(self) -> float:
        return 1e-8 * (1.0 + 2.0 * self.c + np.linalg.norm(self.q0a) * np.linalg.norm(self.q1a))


@dataclass(frozen=True)
class EtaRoot:
    eta: float
    f_value: float
    f_prime: float
    degenerate: bool


@dataclass(frozen=True)
class RootOptions:
    scan_points: Optional[int] = None   # default max(4096, ceil(40 delta0))
    bracket_tol: float = ROOT_BRACKET_TOL
    include_zero: bool = False


def f_eval(prob: TwoBoostProblem, eta):
    """Scalar chord function f; vectorised in eta."""
    eta = np.asarray(eta, dtype=float)
    q0, q1, c = prob.q0a, prob.q1a, prob.c
    # q1^T R(s) q0 = cos s (q1.q0) + sin s (q1 x q0) with x the planar cross
    dot = q1 @ q0
    cross = q1[0] * q0[1] - q1[1] * q0[0]
    base = 0.5 * (q0 @ q0 + q1 @ q1)
    rot = np.cos(eta) * dot + np.sin(eta) * cross
    rot_q = -np.sin(eta) * dot + np.cos(eta) * cross   # q1^T R(eta + pi/2) q0
    out = -c * eta ** 2 + eta * rot_q + base - rot
    return float(out) if out.ndim == 0 else out


def f_polar_eval(r0, r1, theta, c, eta):
    """f written through radii r0, r1 and the relative angle theta."""
    eta = np.asarray(eta, dtype=float)
    out = (-c * eta ** 2 - eta * r0 * r1 * np.sin(eta + theta)
           + 0.5 * (r0 ** 2 + r1 ** 2) - r0 * r1 * np.cos(eta + theta))
    return float(out) if out.ndim == 0 else out


def f_derivative(prob: TwoBoostProblem, eta):
    """f'(eta) = -eta (2c + q1^T R(eta) q0)."""
    eta = np.asarray(eta, dtype=float)
    q0, q1 = prob.q0a, prob.q1a
    dot = q1 @ q0
    cross = q1[0] * q0[1] - q1[1] * q0[0]
    out = -eta * (2 * prob.c + np.cos(eta) * dot + np.sin(eta) * cross)
    return float(out) if out.ndim == 0 else out


def root_bound(prob: TwoBoostProblem) -> float:
    """delta0 such that every root of f lies in [-delta0, delta0]."""
    a, b, c = np.linalg.norm(prob.q0a), np.linalg.norm(prob.q1a), prob.c
    return float((np.sqrt(a * a * b * b + 2 * c * (a + b) ** 2) + a * b) / (2 * c))


def _scan_count(prob, opts: RootOptions) -> int:
    if opts.scan_points is not None:
        if opts.scan_points < 2:
            raise ValueError("scan_points must be at least 2")
        return int(opts.scan_points)
    return max(4096, int(math.ceil(40 * root_bound(prob))))


def _bisect(fn, lo, hi, flo, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_roots(prob: TwoBoostProblem, opts: RootOptions = RootOptions()) -> list:
    """Roots of f in [-delta0, delta0], sorted, with degeneracy flags.

    The trivial root eta = 0 (constant solutions when q0 = q1) is dropped
    unless ``opts.include_zero``.  Roots are isolated by a uniform sign scan,
    bisected to ``opts.bracket_tol`` and polished by one Newton step.
    """
    d0 = root_bound(prob)
    n = _scan_count(prob, opts)
    # the bound is attained when q0 or q1 is 0, so a root can sit exactly on
    # it; scan a hair beyond and clamp, or rounding may hide that root
    pad = d0 * (1.0 + 1e-12) + 1e-300
    grid = np.linspace(-pad, pad, n)
    # even n would put 0 off-grid; force it onto the grid so a root at the
    # origin is never missed between samples
    grid = np.union1d(grid, [0.0])
    vals = f_eval(prob, grid)
    fn = lambda e: f_eval(prob, e)
    dtol = prob.derivative_tol
    roots = []
    for i in range(len(grid)):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif i + 1 < len(grid) and vals[i + 1] != 0.0 and (vals[i] > 0) != (vals[i + 1] > 0):
            roots.append(_bisect(fn, grid[i], grid[i + 1], vals[i], opts.bracket_tol))
    # A pair of nearby roots, or a touching root, can hide between two
    # samples of equal sign.  At every interior local minimum of |f| locate
    # the extremum of f and inspect its value.
    fp = lambda e: f_derivative(prob, e)
    absv = np.abs(vals)
    for i in range(1, len(grid) - 1):
        if not (absv[i] < absv[i - 1] and absv[i] <= absv[i + 1]):
            continue
        if vals[i] == 0.0 or (vals[i - 1] > 0) != (vals[i] > 0) or (vals[i + 1] > 0) != (vals[i] > 0):
            continue
        lo, hi = grid[i - 1], grid[i + 1]
        flo, fhi = fp(lo), fp(hi)
        if (flo > 0) == (fhi > 0):
            continue
        e = _bisect(fp, lo, hi, flo, opts.bracket_tol)
        fe = f_eval(prob, e)
        if (fe > 0) != (vals[i] > 0):
            roots.append(_bisect(fn, lo, e, vals[i - 1], opts.bracket_tol))
            roots.append(_bisect(fn, e, hi, fe, opts.bracket_tol))
        elif abs(fe) <= dtol:
            roots.append(e)
    out = []
    for e in sorted(roots):
        fp = f_derivative(prob, e)
        fv = f_eval(prob, e)
        if fp != 0.0 and abs(fv / fp) < 1e-6:
            e2 = e - fv / fp
            if abs(f_eval(prob, e2)) <= abs(fv):
                e = e2
        e = min(max(e, -d0), d0)
        fv, fp = f_eval(prob, e), f_derivative(prob, e)
        if not opts.include_zero and abs(e) < 1e-9:
            continue
        if out and abs(out[-1].eta - e) < 1e-9:
            continue
        out.append(EtaRoot(eta=float(e), f_value=float(fv), f_prime=float(fp),
                           degenerate=bool(abs(fp) < dtol)))
    # two roots this close are one double root split by rounding
    for i in range(len(out) - 1):
        if out[i + 1].eta - out[i].eta < PAIR_TOL:
            out[i] = replace(out[i], degenerate=True)
            out[i + 1] = replace(out[i + 1], degenerate=True)
    return out


# ---------------------------------------------------------------------------
# Chords


@dataclass
class Chord:
    """A critical point (v, eta) with sampled path and residual certificates.

    ``kind`` is ``"closed"`` for chords of H0 built from the rotation
    formula, ``"free"`` for the kinetic Hamiltonian, ``"shot"`` for chords
    produced by the shooting solver.  ``samples`` holds ``n_samples``
    Cartesian phase points at uniform t in [0, 1].
    """

    eta: float
    q0: np.ndarray
    q1: np.ndarray
    c: float
    samples: np.ndarray
    kind: str = "closed"
    velocity: Optional[np.ndarray] = None
    residuals: dict = field(default_factory=dict)
    hamiltonian: object = None
    psi: Optional[float] = None
    f_value: float = float("nan")
    f_prime: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def p0(self) -> np.ndarray:
        return self.samples[0, 2:]

    def certified(self) -> bool:
        r = self.residuals
        return (r.get("boundary", np.inf) <= BOUNDARY_TOL
                and r.get("energy", np.inf) <= ENERGY_TOL
                and r.get("ode", np.inf) <= ODE_TOL)

    def path(self, n: int) -> np.ndarray:
        """Samples at n uniform times."""
        sampler = self.extra.get("sampler")
        if sampler is not None:
            return sampler(n)[0]
        if self.kind == "closed":
            return closed_form_path(self.q0, self.q1, self.eta, np.linspace(0, 1, n))
        if self.kind == "scaled":
            d = self.hamiltonian.delta
            s = np.sqrt(d)
            xs = closed_form_path(self.q0 * s, self.q1 * s, self.eta * d, np.linspace(0, 1, n))
            return xs @ np.linalg.inv(_scale_matrix(d)).T
        if self.kind == "free":
            t = np.linspace(0, 1, n)[:, None]
            q = (1 - t) * self.q0 + t * self.q1
            p = np.broadcast_to((self.q1 - self.q0) / self.eta, q.shape)
            return np.concatenate([q, p], axis=1)
        raise ValueError("no resampling rule for this chord")

    def linearized(self, n: int):
        """Samples and linearised flow matrices at n uniform times."""
        sampler = self.extra.get("sampler")
        if sampler is not None:
            return sampler(n)
        xs = self.path(n)
        t = np.linspace(0, 1, n)
        H = self.hamiltonian
        return xs, np.array([H.linear_flow(s * self.eta) for s in t])


def coefficient_matrix(eta: float, t) -> np.ndarray:
    """4x4 matrix M(t) with v(t) = M(t) (q0, q1) for the chord with multiplier eta."""
    t = np.asarray(t, dtype=float)
    ra = rotation_batch(t * eta)
    rb = rotation_batch(eta * (t - 1))
    m = np.empty(t.shape + (4, 4))
    m[..., :2, :2] = (1 - t)[..., None, None] * ra
    m[..., :2, 2:] = t[..., None, None] * rb
    m[..., 2:, :2] = -ra / eta
    m[..., 2:, 2:] = rb / eta
    return m


def closed_form_path(q0, q1, eta, t) -> np.ndarray:
    qq = np.concatenate([np.asarray(q0, float), np.asarray(q1, float)])
    return coefficient_matrix(eta, t) @ qq


def _chord_residuals(xs, q0, q1, eta, c, H, dxdt) -> dict:
    return {
        "boundary": float(max(np.max(np.abs(xs[0, :2] - q0)), np.max(np.abs(xs[-1, :2] - q1)))),
        "energy": float(np.max(np.abs(H.value(xs) - c))),
        "ode": float(np.max(np.abs(dxdt - eta * H.field(xs)))),
    }


def chord_from_eta(prob: TwoBoostProblem, eta: float, n_samples: int = N_CHORD_SAMPLES) -> Chord:
    """Build and certify the H0 chord attached to a root eta != 0."""
    if eta == 0:
        raise DomainError("eta = 0 gives constant solutions, not a chord")
    q0, q1 = prob.q0a, prob.q1a
    t = np.linspace(0.0, 1.0, n_samples)
    m = coefficient_matrix(eta, t)
    qq = np.concatenate([q0, q1])
    xs = m @ qq
    # exact t-derivative of the coefficient matrix, independent of the field
    ra = rotation_batch(t * eta)
    rb = rotation_batch(eta * (t - 1))
    dra = eta * rotation_batch(t * eta + np.pi / 2)
    drb = eta * rotation_batch(eta * (t - 1) + np.pi / 2)
    dm = np.empty_like(m)
    dm[:, :2, :2] = -ra + (1 - t)[:, None, None] * dra
    dm[:, :2, 2:] = rb + t[:, None, None] * drb
    dm[:, 2:, :2] = -dra / eta
    dm[:, 2:, 2:] = drb / eta
    dxdt = dm @ qq
    H = CopernicanH0()
    res = _chord_residuals(xs, q0, q1, eta, prob.c, H, dxdt)
    return Chord(eta=float(eta), q0=q0, q1=q1, c=prob.c, samples=xs, kind="closed",
                 velocity=dxdt, residuals=res, hamiltonian=H, f_value=f_eval(prob, eta),
                 f_prime=f_derivative(prob, eta))


def initial_momentum(q0, q1, eta) -> np.ndarray:
    """p0 = (-q0 + R(-eta) q1) / eta."""
    return (-np.asarray(q0, float) + rotation(-eta) @ np.asarray(q1, float)) / eta


def constant_circle(q, c) -> tuple:
    """Centre and radius of the circle of momenta over q in the level set H0 = c.

    Relevant when q0 = q1: the constant paths at q form this circle.
    """
    q = np.asarray(q, float)
    return np.array([-q[1], q[0]]) + 0.0, float(np.sqrt(q @ q + 2 * c))


def chords(prob: TwoBoostProblem, opts: RootOptions = RootOptions(),
           n_samples: int = N_CHORD_SAMPLES) -> list:
    """All nonconstant chords of the problem, sorted by eta."""
    return [chord_from_eta(prob, r.eta, n_samples) for r in find_roots(prob, opts)]


# ---------------------------------------------------------------------------
# Counting statements


@dataclass(frozen=True)
class ParityReport:
    n_plus: int
    n_minus: int
    both_odd: bool
    sign_alternation: bool


def parity_report(prob: TwoBoostProblem, opts: RootOptions = RootOptions()) -> ParityReport:
    """Root counts on each side of zero and the sign pattern of f'.

    Raises `DegenerateProblemError` if any root is degenerate; nudging c
    restores genericity.
    """
    roots = find_roots(prob, opts)
    if any(r.degenerate for r in roots):
        raise DegenerateProblemError(
            "degenerate root found; parity is undefined, perturb the energy c slightly")
    pos = [r for r in roots if r.eta > 0]
    neg = [r for r in roots if r.eta < 0]

    def alternates(rs):
        s = [np.sign(r.f_prime) for r in rs]
        return all(s[i] == -s[i + 1] for i in range(len(s) - 1))

    alt = alternates(pos) and alternates(neg)
    if pos:
        alt = alt and pos[0].f_prime < 0 and pos[-1].f_prime < 0
    if neg:
        alt = alt and neg[0].f_prime > 0 and neg[-1].f_prime > 0
    return ParityReport(n_plus=len(pos), n_minus=len(neg),
                        both_odd=len(pos) % 2 == 1 and len(neg) % 2 == 1,
                        sign_alternation=bool(alt))


def asymptotic_interval(r0, r1, theta, c) -> tuple:
    """Open interval whose integer points each force a positive root."""
    s = np.pi * np.sqrt(2 * c)
    return (theta / np.pi + abs(r0 - r1) / s, theta / np.pi + (r0 + r1) / s - 1)


def asymptotic_lower_bound(r0, r1, theta, c) -> int:
    """Number of positive integers n inside the interval from `asymptotic_interval`.

    Each such n pins a sign change of f between consecutive points
    2 pi n - theta, so the result is a lower bound on the positive root count.
    """
    if r0 < 0 or r1 < 0:
        raise ValueError("radii must be nonnegative")
    lo, hi = asymptotic_interval(r0, r1, theta, c)
    if hi <= lo:
        return 0
    first = max(1, math.floor(lo) + 1)
    last = math.ceil(hi) - 1
    return max(0, last - first + 1)


# ---------------------------------------------------------------------------
# Scaling and the kinetic limit


def _scale_matrix(delta) -> np.ndarray:
    s = np.sqrt(delta)
    return np.diag([s, s, 1.0 / s, 1.0 / s])


def scaling_map(chord: Chord, delta: float) -> Chord:
    """Map a chord of H_delta at energy 1 to a chord of H0 at energy 1/delta.

    (v, eta) goes to (phi_delta o v, delta eta).  Samples and velocities are
    pushed through the linear map and the residuals are recomputed against
    H0, so a certified input yields a certified image only if the bijection
    holds.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    S = _scale_matrix(delta)
    s = np.sqrt(delta)
    out = replace(chord, eta=chord.eta * delta, q0=chord.q0 * s, q1=chord.q1 * s,
                  c=chord.c / delta, samples=chord.samples @ S.T,
                  velocity=None if chord.velocity is None else chord.velocity @ S.T,
                  hamiltonian=CopernicanH0(), kind="closed", extra={})
    out.residuals = _chord_residuals(out.samples, out.q0, out.q1, out.eta, out.c,
                                     out.hamiltonian, out.velocity)
    return out


def inverse_scaling_map(chord: Chord, delta: float) -> Chord:
    """Inverse of `scaling_map`: an H0 chord at energy 1/delta to an H_delta chord at energy 1."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    from .hamiltonians import ScaledHamiltonian
    Si = np.linalg.inv(_scale_matrix(delta))
    s = np.sqrt(delta)
    out = replace(chord, eta=chord.eta / delta, q0=chord.q0 / s, q1=chord.q1 / s,
                  c=chord.c * delta, samples=chord.samples @ Si.T,
                  velocity=None if chord.velocity is None else chord.velocity @ Si.T,
                  hamiltonian=ScaledHamiltonian(delta), kind="scaled", extra={})
    out.residuals = _chord_residuals(out.samples, out.q0, out.q1, out.eta, out.c,
                                     out.hamiltonian, out.velocity)
    return out


def scaled_chord(q0, q1, delta, eta_delta, n_samples=N_CHORD_SAMPLES) -> Chord:
    """Chord of H_delta at energy 1 attached to the root eta_delta of g_delta."""
    s = np.sqrt(delta)
    prob = TwoBoostProblem(tuple(np.asarray(q0) * s), tuple(np.asarray(q1) * s), 1.0 / delta)
    return inverse_scaling_map(chord_from_eta(prob, eta_delta * delta, n_samples), delta)


def g_delta(q0, q1, delta, eta):
    """Chord function of H_delta at energy 1, written out directly."""
    q0 = np.asarray(q0, float)
    q1 = np.asarray(q1, float)
    eta = np.asarray(eta, dtype=float)
    dot = q1 @ q0
    cross = q1[0] * q0[1] - q1[1] * q0[0]
    a = delta * eta
    out = (-eta ** 2 + a * (-np.sin(a) * dot + np.cos(a) * cross)
           + 0.5 * (q0 @ q0 + q1 @ q1) - (np.cos(a) * dot + np.sin(a) * cross))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class GDeltaResult:
    eta_delta: float
    lower: float
    upper: float


def g_delta_analysis(q0, q1, delta: float) -> GDeltaResult:
    """Unique positive root of g_delta and its two-sided bounds.

    The root is found by isolating roots of the scaled H0 problem, so the
    returned bounds can be checked against an independent computation.
    """
    q0 = np.asarray(q0, float)
    q1 = np.asarray(q1, float)
    if np.allclose(q0, q1):
        raise ValueError("endpoints must differ")
    pq = np.linalg.norm(q0) * np.linalg.norm(q1)
    if pq > 0 and not delta < np.sqrt(2.0 / pq):
        raise ValueError("delta must satisfy delta < sqrt(2 / (|q0||q1|)) "
                         "for the positive chord to be unique")
    if not delta > 0:
        raise ValueError("delta must be positive")
    s = np.sqrt(delta)
    prob = TwoBoostProblem(tuple(q0 * s), tuple(q1 * s), 1.0 / delta)
    pos = [r.eta for r in find_roots(prob) if r.eta > 0]
    if len(pos) != 1:
        raise RuntimeError(f"expected one positive root, found {len(pos)}")
    d = np.linalg.norm(q1 - q0)
    return GDeltaResult(eta_delta=pos[0] / delta,
                        lower=float(d / np.sqrt(2 * (1 + delta ** 2 * pq))),
                        upper=float(d / np.sqrt(2 * (1 - delta ** 2 * pq))))


def free_chords(q0, q1, c: float, n_samples: int = N_CHORD_SAMPLES) -> tuple:
    """The two chords of the kinetic Hamiltonian |p|^2/2 at energy c."""
    q0 = np.asarray(q0, float)
    q1 = np.asarray(q1, float)
    d = np.linalg.norm(q1 - q0)
    if d == 0:
        raise DomainError("q0 = q1: the constant solutions form a circle, not two chords")
    H = FreeHamiltonian()
    out = []
    t = np.linspace(0, 1, n_samples)[:, None]
    for sgn in (1.0, -1.0):
        eta = sgn * np.sqrt(2 * c) / d
        p = (q1 - q0) / eta
        q = (1 - t) * q0 + t * q1
        xs = np.concatenate([q, np.broadcast_to(p, q.shape)], axis=1)
        dxdt = np.concatenate([np.broadcast_to(q1 - q0, q.shape), np.zeros_like(q)], axis=1)
        res = _chord_residuals(xs, q0, q1, eta, c, H, dxdt)
        out.append(Chord(eta=float(eta), q0=q0, q1=q1, c=c, samples=xs, kind="free",
                         velocity=dxdt, residuals=res, hamiltonian=H))
    return tuple(out)
