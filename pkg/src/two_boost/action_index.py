"""Action values, gradient norms and transverse Maslov indices of chords.

The transverse index is computed in the 2-dimensional hyperplane
xi = ker dH  intersected with  ker lambda,  lambda = p dq,  along the chord.
The fiber line over q0 intersected with xi is carried by the linearised
flow, projected back to xi along X_H, and written in a continuous
symplectic frame of xi.  The frame is rotated so that the fiber lines at
both ends become the reference line, with the rotation chosen so that the
resulting loop of Lagrangian planes in R^4 has zero Maslov number.  The
index is then the Robbin-Salamon count of crossings of the line path with
the reference line.

Orientation convention: omega(a, b) = a_p . b_q - a_q . b_p and the frame
(e, g) of xi satisfies omega(e, g) = +1.  With these choices the two chords
of |p|^2/2 get indices +1/2 and -1/2 according to the sign of eta.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .hamiltonians import Hamiltonian
from .symplectic_core import J4, symplectic_form

MIN_SAMPLES = 16
DEFAULT_INDEX_SAMPLES = 1024
MAX_INDEX_SAMPLES = 16384


class TrivializationError(RuntimeError):
    """The hyperplane xi degenerates somewhere along the chord."""


@dataclass(frozen=True)
class DiscretizedPath:
    """Samples of a path at uniform t in [0, 1] between the fibers over q0 and q1."""

    samples: np.ndarray
    q0: np.ndarray
    q1: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.samples, dtype=float)
        q0 = np.asarray(self.q0, dtype=float)
        q1 = np.asarray(self.q1, dtype=float)
        if xs.ndim != 2 or xs.shape[1] != 4 or len(xs) < 2:
            raise ValueError("samples must have shape (N, 4)")
        if np.max(np.abs(xs[0, :2] - q0)) > 1e-10 or np.max(np.abs(xs[-1, :2] - q1)) > 1e-10:
            raise ValueError("path endpoints do not lie over q0 and q1")
        object.__setattr__(self, "samples", xs)
        object.__setattr__(self, "q0", q0)
        object.__setattr__(self, "q1", q1)

    @classmethod
    def from_chord(cls, chord, n: Optional[int] = None) -> "DiscretizedPath":
        xs = chord.samples if n is None else chord.path(n)
        return cls(xs, chord.q0, chord.q1)


def _trapezoid(y, h):
    return h * (np.sum(y) - 0.5 * (y[0] + y[-1]))


def action_eval(path: DiscretizedPath, eta: float, H: Hamiltonian, c: float) -> float:
    """Trapezoid approximation of  int p dq - eta int (H - c) dt."""
    xs = path.samples
    n = len(xs)
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    dq = np.diff(xs[:, :2], axis=0)
    pm = 0.5 * (xs[1:, 2:] + xs[:-1, 2:])
    liouville = float(np.sum(pm * dq))
    return liouville - eta * _trapezoid(H.value(xs) - c, 1.0 / (n - 1))


def time_derivative(xs: np.ndarray) -> np.ndarray:
    """Fourth-order finite-difference d/dt of samples on a uniform grid of [0, 1]."""
    n = len(xs)
    if n < 5:
        raise ValueError("need at least 5 samples")
    h = 1.0 / (n - 1)
    d = np.empty_like(xs)
    d[2:-2] = (xs[:-4] - 8 * xs[1:-3] + 8 * xs[3:-1] - xs[4:]) / (12 * h)
    # one-sided fourth-order stencils at the two ends of the interval
    c = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    d[0] = c @ xs[:5]
    d[1] = np.array([-3, -10, 18, -6, 1]) / (12 * h) @ xs[:5]
    d[-1] = -(c @ xs[::-1][:5])
    d[-2] = -(np.array([-3, -10, 18, -6, 1]) / (12 * h) @ xs[::-1][:5])
    return d


def action_gradient_norm(path: DiscretizedPath, eta: float, H: Hamiltonian, c: float) -> float:
    """Norm in L^2 x R of the gradient (-J (dv/dt - eta X_H(v)), -int (H - c))."""
    xs = path.samples
    n = len(xs)
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    h = 1.0 / (n - 1)
    r = time_derivative(xs) - eta * H.field(xs)
    first = -(r @ J4.T)
    l2 = np.sqrt(_trapezoid(np.sum(first ** 2, axis=1), h))
    second = -_trapezoid(H.value(xs) - c, h)
    return float(np.hypot(l2, second))


def h0_chord_action(q0, q1, eta: float, c: float) -> float:
    """Exact action of an H0 chord: eta (|p|^2/2 + c) with |p| constant along it."""
    from .chord_solver import initial_momentum
    p0 = initial_momentum(q0, q1, eta)
    return float(eta * (0.5 * p0 @ p0 + c))


@dataclass(frozen=True)
class SignCheck:
    eta_sign: int
    action_sign: int
    consistent: bool
    action: float


def sign_action_check(chord, H: Optional[Hamiltonian] = None) -> SignCheck:
    """Compare the sign of the action with the sign of eta."""
    H = chord.hamiltonian if H is None else H
    a = action_eval(DiscretizedPath.from_chord(chord), chord.eta, H, chord.c)
    es = int(np.sign(chord.eta))
    # the action of a nonconstant chord is bounded away from zero on
    # contact-type levels; tiny values are rounding on constant paths
    as_ = 0 if abs(a) < 1e-12 else int(np.sign(a))
    return SignCheck(eta_sign=es, action_sign=as_, consistent=es == as_, action=a)


# ---------------------------------------------------------------------------
# Transverse Maslov index


@dataclass
class MaslovResult:
    """Transverse index ``mu_tr`` with its crossing decomposition.

    ``crossings`` lists ``(t, contribution)`` pairs, the endpoint t = 0
    contributing +-1/2.  ``winding`` is the total angle of the line path
    relative to the reference line, in units of pi.
    """

    mu_tr: Fraction
    crossings: list = field(default_factory=list)
    winding: float = 0.0
    n_samples: int = 0
    loop_shift: int = 0
    convention: str = "mu = mu_tr; the signature term of the q0 = q1 case is not computed"

    @property
    def as_string(self) -> str:
        return f"{self.mu_tr.numerator}/{self.mu_tr.denominator}"


def _fiber_line(x, grad):
    """Direction (0, w) of the fiber tangent inside ker dH; w is orthogonal to dH/dp."""
    gp = grad[2:]
    w = np.array([gp[1], -gp[0]])
    nw = np.linalg.norm(w)
    if nw == 0:
        raise TrivializationError("dH/dp vanishes; the fiber is tangent to the level set")
    return np.array([0.0, 0.0, w[0] / nw, w[1] / nw])


def _frames(xs, grads, fields, seed):
    """Continuous frames (e, g) of xi with omega(e, g) = 1, plus the projector data."""
    n = len(xs)
    lam_normal = np.zeros_like(xs)
    lam_normal[:, :2] = xs[:, 2:]
    # orthonormal basis (a, b) of span(grad H, lambda normal) by Gram-Schmidt
    a = grads / np.linalg.norm(grads, axis=1, keepdims=True)
    b = lam_normal - np.sum(lam_normal * a, axis=1, keepdims=True) * a
    nb = np.linalg.norm(b, axis=1)
    if np.min(nb) < 1e-12 * np.max(np.linalg.norm(lam_normal, axis=1) + 1e-300):
        k = int(np.argmin(nb))
        raise TrivializationError(f"xi degenerates at sample {k} (t = {k / (n - 1):.6g})")
    b = b / nb[:, None]
    lam_field = np.sum(xs[:, 2:] * fields[:, :2], axis=1)
    if np.min(np.abs(lam_field)) < 1e-12:
        k = int(np.argmin(np.abs(lam_field)))
        raise TrivializationError(f"lambda(X_H) vanishes at sample {k} (t = {k / (n - 1):.6g})")

    def proj(k, v):
        return v - (v @ a[k]) * a[k] - (v @ b[k]) * b[k]

    es = np.empty_like(xs)
    gs = np.empty_like(xs)
    e = seed
    for k in range(n):
        e = proj(k, e)
        e = e / np.linalg.norm(e)
        g = proj(k, J4 @ e)
        g = g - (g @ e) * e
        g = g / np.linalg.norm(g)
        s = symplectic_form(e, g)
        if s < 0:
            g, s = -g, -s
        es[k] = e
        gs[k] = g / s
    return es, gs, lam_field


def _line_angles(u, es, gs):
    x = symplectic_form(u, gs)
    y = symplectic_form(es, u)
    return np.arctan2(y, x)


def _lift_line(theta):
    """Lift angles of unoriented lines (defined mod pi) to a continuous function."""
    return np.unwrap(2.0 * theta) / 2.0


def _loop_winding(xs, es, gs, beta):
    f = np.cos(beta)[:, None] * es + np.sin(beta)[:, None] * gs
    y = np.zeros_like(xs)
    y[:, 2:] = xs[:, 2:]
    zq = np.stack([f[:, :2], y[:, :2]], axis=2)
    zp = np.stack([f[:, 2:], y[:, 2:]], axis=2)
    det = np.linalg.det(zq + 1j * zp)
    ang = np.unwrap(2.0 * np.angle(det))
    return (ang[-1] - ang[0]) / (2 * np.pi)


def _crossings(t, phi):
    """Robbin-Salamon crossings of the lifted relative angle phi with multiples of pi."""
    out = []
    k = 1
    while k < len(phi) and phi[k] == phi[0]:
        k += 1
    if k == len(phi):
        raise TrivializationError("line path never leaves the reference line")
    out.append((0.0, Fraction(1, 2) if phi[k] > phi[0] else Fraction(-1, 2)))
    m = np.floor(phi / np.pi)
    for i in range(k, len(phi) - 1):
        lo, hi = phi[i], phi[i + 1]
        if m[i + 1] > m[i]:
            for j in range(int(m[i]) + 1, int(m[i + 1]) + 1):
                s = (j * np.pi - lo) / (hi - lo)
                out.append((float(t[i] + s * (t[i + 1] - t[i])), Fraction(1)))
        elif m[i + 1] < m[i]:
            for j in range(int(m[i]), int(m[i + 1]), -1):
                s = (j * np.pi - lo) / (hi - lo)
                out.append((float(t[i] + s * (t[i + 1] - t[i])), Fraction(-1)))
    # first segment after the endpoint: phi starts on the reference line, so
    # only crossings strictly beyond it count
    lo, hi = phi[0], phi[k]
    if abs(hi - lo) >= np.pi:
        raise TrivializationError("line path rotates by pi within one sample; refine")
    return out


def maslov_from_samples(xs, phis, H: Hamiltonian) -> MaslovResult:
    """Transverse index from samples ``xs`` and linearised flows ``phis`` (from t = 0)."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    grads = np.asarray(H.grad(xs))
    fields = np.asarray(H.field(xs))
    l0 = _fiber_line(xs[0], grads[0])
    l1 = _fiber_line(xs[-1], grads[-1])
    es, gs, lam_field = _frames(xs, grads, fields, l0)
    u = np.einsum("kij,j->ki", phis, l0)
    lam_u = np.sum(xs[:, 2:] * u[:, :2], axis=1)
    u = u - (lam_u / lam_field)[:, None] * fields
    theta = _lift_line(_line_angles(u, es, gs))
    a0 = theta[0]
    a1 = float(np.arctan2(symplectic_form(es[-1], l1), symplectic_form(l1, gs[-1])))
    t = np.linspace(0.0, 1.0, n)

    def beta(k):
        return a0 + t * (a1 + k * np.pi - a0)

    w0 = _loop_winding(xs, es, gs, beta(0))
    w1 = _loop_winding(xs, es, gs, beta(1))
    slope = w1 - w0
    if abs(slope - round(slope)) > 1e-6 or round(slope) == 0:
        raise TrivializationError("loop winding is not affine-integral in the frame shift")
    kf = -w0 / slope
    k = int(round(kf))
    if abs(kf - k) > 1e-6:
        raise TrivializationError("no frame shift closes the loop with zero winding")
    phi = theta - beta(k)
    crossings = _crossings(t, phi)
    mu = sum((c for _, c in crossings), Fraction(0))
    check = Fraction(int(np.floor(phi[-1] / np.pi))) + Fraction(1, 2)
    if mu != check:
        raise TrivializationError("crossing count disagrees with the endpoint winding")
    return MaslovResult(mu_tr=mu, crossings=crossings, winding=float(phi[-1] / np.pi),
                        n_samples=n, loop_shift=k)


def maslov_transverse(chord, H: Optional[Hamiltonian] = None,
                      n_start: int = DEFAULT_INDEX_SAMPLES,
                      n_max: int = MAX_INDEX_SAMPLES) -> MaslovResult:
    """Transverse Maslov index of a chord.

    Samples are doubled from ``n_start`` until the index and crossing count
    agree over two successive doublings.
    """
    H = chord.hamiltonian if H is None else H
    history = []
    n = n_start
    while True:
        xs, phis = chord.linearized(n)
        res = maslov_from_samples(xs, phis, H)
        history.append(res)
        if len(history) >= 3:
            sig = [(r.mu_tr, len(r.crossings)) for r in history[-3:]]
            if sig[0] == sig[1] == sig[2]:
                return res
        if n >= n_max:
            raise TrivializationError("crossing set did not stabilise under refinement")
        n *= 2


def localization_index(a_start: float, a_end: float) -> Fraction:
    """Index of a path of 1x1 symmetric graphs from a_start to a_end with no interior zero."""
    return Fraction(int(np.sign(a_end)), 2) - Fraction(int(np.sign(a_start)), 2)
