"""Rotation algebra, the linear flow of the rotating-frame Hamiltonian and
the standard symplectic structure on T*R^2.

Phase points are stored as float arrays ``(q1, q2, p1, p2)``.  Angles are
never reduced modulo 2*pi here.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EXACT_TOL = 1e-12
FD_TOL = 1e-6

# 2x2 complex structure J q = (q2, -q1), equal to rotation(pi/2).
J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])

# 4x4 structure mapping a gradient (dH/dq, dH/dp) to the Hamiltonian field
# (dH/dp, -dH/dq).
J4 = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

# Matrix of the symplectic form omega = dp ^ dq:
# omega(a, b) = a_p . b_q - a_q . b_p = a^T OMEGA b.
OMEGA = np.block([[np.zeros((2, 2)), -np.eye(2)], [np.eye(2), np.zeros((2, 2))]])

# Hessian of H0 in the (q, p) ordering; the flow generator is J4 @ A_H0.
A_H0 = np.block([[np.zeros((2, 2)), J2.T], [J2, np.eye(2)]])


def rotation(t: float) -> np.ndarray:
    """Return the rotation matrix [[cos t, sin t], [-sin t, cos t]]."""
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, s], [-s, c]])


def rotation_batch(t: np.ndarray) -> np.ndarray:
    """Vectorised `rotation` over an array of angles, shape ``(..., 2, 2)``."""
    t = np.asarray(t, dtype=float)
    c, s = np.cos(t), np.sin(t)
    out = np.empty(t.shape + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = s
    out[..., 1, 0] = -s
    out[..., 1, 1] = c
    return out


def flow_matrix(t: float) -> np.ndarray:
    """Time-t flow of H0 as the 4x4 block matrix [[R(t), t R(t)], [0, R(t)]]."""
    r = rotation(t)
    out = np.zeros((4, 4))
    out[:2, :2] = r
    out[:2, 2:] = t * r
    out[2:, 2:] = r
    return out


def flow_generator() -> np.ndarray:
    """Constant matrix G with d/dt flow_matrix(t) = G @ flow_matrix(t)."""
    return J4 @ A_H0


def symplectic_form(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """omega(a, b) = a_p . b_q - a_q . b_p; broadcasts over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (np.sum(a[..., 2:] * b[..., :2], axis=-1)
            - np.sum(a[..., :2] * b[..., 2:], axis=-1))


def is_symplectic(m: np.ndarray, tol: float = EXACT_TOL) -> bool:
    """True when m^T OMEGA m equals OMEGA entrywise within tol."""
    return bool(np.max(np.abs(m.T @ OMEGA @ m - OMEGA)) <= tol)


class DomainError(ValueError):
    """Raised when an input lies outside the domain of an operation."""


@dataclass(frozen=True)
class PhasePoint:
    """A point of T*R^2 with Cartesian position ``q`` and momentum ``p``."""

    q: tuple
    p: tuple

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        p = tuple(float(v) for v in self.p)
        if len(q) != 2 or len(p) != 2:
            raise ValueError("q and p must have two components")
        if not all(np.isfinite(q + p)):
            raise ValueError("phase point components must be finite")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_array(cls, x) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        return cls((x[0], x[1]), (x[2], x[3]))

    def as_array(self) -> np.ndarray:
        return np.array(self.q + self.p)

    def to_polar(self) -> tuple:
        return to_polar(self.as_array())

    @classmethod
    def from_polar(cls, r, theta, p_r, p_theta) -> "PhasePoint":
        return cls.from_array(from_polar(r, theta, p_r, p_theta))


def to_polar(x) -> tuple:
    """Return ``(r, theta, p_r, p_theta)`` for a Cartesian phase point.

    ``p_r = q.p / |q|`` and ``p_theta = q1 p2 - q2 p1``.  Raises
    `DomainError` at the origin of the plane.
    """
    x = np.asarray(x, dtype=float)
    q1, q2, p1, p2 = x
    r = float(np.hypot(q1, q2))
    if r == 0.0:
        raise DomainError("polar coordinates are undefined at q = 0")
    theta = float(np.arctan2(q2, q1))
    return r, theta, float((q1 * p1 + q2 * p2) / r), float(q1 * p2 - q2 * p1)


def from_polar(r, theta, p_r, p_theta) -> np.ndarray:
    """Inverse of `to_polar` as a Cartesian array ``(q1, q2, p1, p2)``."""
    c, s = np.cos(theta), np.sin(theta)
    # radial unit (c, s), angular unit (-s, c); p = p_r e_r + (p_theta / r) e_theta
    pt = p_theta / r
    return np.array([r * c, r * s, p_r * c - pt * s, p_r * s + pt * c])
