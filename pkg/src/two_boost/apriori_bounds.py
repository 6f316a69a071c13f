"""Closed-form a-priori constants: confinement boxes, eta and action
bounds for action windows [a, b], the Novikov window test, homotopy
admissibility and the floor on positive action values.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class CompactBox:
    """{r <= r_max, |p_r| <= pr_max, -p_theta <= ptheta_max} in polar coordinates.

    Here p_theta = q1 p2 - q2 p1.  On {H0 <= m} the relation
    p_r^2 + (r - p_theta/r)^2 <= r^2 + 2m bounds -p_theta by
    r (sqrt(r^2 + 2m) - r) <= r sqrt(2m); the other side of p_theta is
    only bounded by r (sqrt(r^2 + 2m) + r), so the box is one-sided there.
    """

    r_max: float
    pr_max: float
    ptheta_max: float

    def __post_init__(self):
        if not (self.r_max > 0 and self.pr_max > 0 and self.ptheta_max > 0):
            raise ValueError("box extents must be positive")

    def contains(self, xs, tol: float = 1e-12) -> bool:
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        r = np.hypot(xs[:, 0], xs[:, 1])
        safe = np.where(r > 0, r, 1.0)
        pr = (xs[:, 0] * xs[:, 2] + xs[:, 1] * xs[:, 3]) / safe
        pt = xs[:, 0] * xs[:, 3] - xs[:, 1] * xs[:, 2]
        return bool(np.all(r <= self.r_max + tol) and np.all(np.abs(pr) <= self.pr_max + tol)
                    and np.all(-pt <= self.ptheta_max + tol))

    def contains_box(self, other: "CompactBox") -> bool:
        return (other.r_max <= self.r_max and other.pr_max <= self.pr_max
                and other.ptheta_max <= self.ptheta_max)


def knm_box(q0, q1, n: int, m: float) -> CompactBox:
    """Box containing every chord of H0 - h when ||h|| < m and dh is supported in it."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if not m > 0:
        raise ValueError("m must be positive")
    rn = max(float(np.linalg.norm(q0)), float(np.linalg.norm(q1))) + n
    return CompactBox(r_max=rn, pr_max=math.sqrt(rn * rn + 2 * m), ptheta_max=rn * math.sqrt(2 * m))


def eta_bound_small_gradient(c: float, action_abs: float) -> float:
    """|eta| bound for pairs whose action gradient has norm below 1."""
    if not c > 0:
        raise ValueError("c must be positive")
    return action_abs / c + 1.0 / math.sqrt(2 * c)


@dataclass(frozen=True)
class BoundConstants:
    c: float
    y_frak: float
    a_frak: float
    e_frak: float
    q_frak: float
    p_frak: float
    h_frak: float
    variant: str = "base"

    def as_dict(self) -> dict:
        return asdict(self)


def eta_window_bound(a, b, c, J_norm, variant: str = "base") -> float:
    """Bound on |eta| along trajectories with actions in [a, b].

    ``variant="base"`` uses max(|a|,|b|)/c + 1/sqrt(2c); ``"positive"`` is the
    form re-derived for the positive-action argument, with 2 max(|a|,|b|)/c
    and 1/sqrt(c).  Both are kept and labelled.
    """
    m = max(abs(a), abs(b))
    if variant == "base":
        core = m / c + 1.0 / math.sqrt(2 * c)
    elif variant == "positive":
        core = 2.0 * m / c + 1.0 / math.sqrt(c)
    else:
        raise ValueError("variant must be 'base' or 'positive'")
    return 1.5 * (core + J_norm ** 2 * (b - a))


def window_constants(a: float, b: float, c: float, J_norm: float, h_frak: float, eps: float,
                     q0=(0.0, 0.0), q1=(0.0, 0.0), variant: str = "base") -> BoundConstants:
    """The eta, action, energy, position and momentum constants for the window [a, b]."""
    if a > b:
        raise ValueError("need a <= b")
    if not c > 0:
        raise ValueError("c must be positive")
    y = eta_window_bound(a, b, c, J_norm, variant)
    af = max(abs(a), abs(b)) + c / 3.0 * y
    e = J_norm * (b - a + c / 3.0 * y)
    qmin = min(float(np.linalg.norm(q0)), float(np.linalg.norm(q1)))
    qf = qmin + 2.0 * (3.0 * eps + af / math.sqrt(2 * c) + y * h_frak)
    pf = 2.0 * qf + math.sqrt(2.0 * (h_frak + c + eps))
    return BoundConstants(c=c, y_frak=y, a_frak=af, e_frak=e, q_frak=qf, p_frak=pf,
                          h_frak=h_frak, variant=variant)


def novikov_window_ok(a: float, b: float, c: float) -> bool:
    """a <= max(3b, 3 sqrt(c/2)) and b >= min(3a, -3 sqrt(c/2))."""
    if not c > 0:
        raise ValueError("c must be positive")
    s = 3.0 * math.sqrt(c / 2.0)
    return bool(a <= max(3.0 * b, s) and b >= min(3.0 * a, -s))


def homotopy_admissible(dhs_sup: float, c: float, J_norm: float) -> bool:
    """sup |d_s h_s| (1/c + ||J||^2) <= 1/3."""
    if not c > 0:
        raise ValueError("c must be positive")
    return bool(dhs_sup * (1.0 / c + J_norm ** 2) <= 1.0 / 3.0)


def positive_variant(dhs_sup: float, c: float, J_norm: float, delta_h0: float) -> bool:
    """Stricter admissibility that keeps positive actions positive along the homotopy."""
    if not c > 0 or not delta_h0 > 0:
        raise ValueError("c and delta_h0 must be positive")
    lim = min(1.0 / (4.0 / c + J_norm ** 2),
              (c / 2.0) / (1.0 + math.sqrt(c) / (2.0 * delta_h0)))
    return bool(dhs_sup <= lim / 3.0)


def positive_action_floor(delta: float, eps_dist: float, C_field: float) -> float:
    """delta eps / (2 C): lower bound on positive action values."""
    if not (delta > 0 and eps_dist > 0 and C_field > 0):
        raise ValueError("inputs must be positive")
    return delta * eps_dist / (2.0 * C_field)


def h0_floor_inputs(q0, q1, c: float, box: CompactBox) -> tuple:
    """(delta, eps, C) for H0 - c on a polar box, from closed-form extrema.

    On the level set dH0(p dp) = |p|^2/2 + c >= c, so delta = c.  Fibers over
    distinct points are |q1 - q0| apart.  The field norm satisfies
    |X_H0|^2 = |p + Jq|^2 + |p|^2 with |p + Jq|^2 = |q|^2 + 2 H0, and on the
    level set inside the box |p| <= |p + Jq| + r, which bounds C.
    """
    eps = float(np.linalg.norm(np.asarray(q1, float) - np.asarray(q0, float)))
    if eps == 0:
        raise ValueError("endpoints must differ")
    r = box.r_max
    w = math.sqrt(r * r + 2 * c)
    C = math.sqrt(w * w + (w + r) ** 2)
    return c, eps, C
