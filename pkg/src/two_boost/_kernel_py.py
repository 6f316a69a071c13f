"""Pure-Python embedded Runge-Kutta (Fehlberg 4(5)) integrator.

Mirrors the compiled kernel line by line.  The 4th-order solution is
propagated and the 5th-order one only drives step control.  ``mode``
selects the vector field: 0 for H0, 1 for H0 - V and 2 for H0 - phi V,
with V the radial power potential described by ``params``
``(a, alpha, r0, R1, beta, supV, c)``.
"""
from __future__ import annotations

import math

import numpy as np

OK, MAX_STEPS, UNDERFLOW, NONFINITE = 0, 1, 2, 3

A2 = (0.25,)
A3 = (3.0 / 32.0, 9.0 / 32.0)
A4 = (1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0)
A5 = (439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0)
A6 = (-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0)
B4 = (25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0)
B5 = (16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0)


def _chi(x):
    if x <= 0.0:
        return 1.0
    if x >= 1.0:
        return 0.0
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def _dchi(x):
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -30.0 * x * x * (1.0 - x) * (1.0 - x)


def make_field(mode, params):
    """Return a function x -> X_H(x) on 4-lists for the given kernel mode."""
    a, alpha, r0, R1, beta, supv, c = (float(v) for v in params)
    k = a * r0 ** (-alpha) if a != 0.0 else 0.0
    cc = alpha * (alpha + 2.0) / 8.0
    bb = -alpha * (alpha + 4.0) / 4.0
    aa = 1.0 + (alpha * alpha + 6.0 * alpha) / 8.0
    r0sq = r0 * r0

    def field(x):
        q1, q2, p1, p2 = x
        gq1, gq2 = -p2, p1
        gp1, gp2 = p1 + q2, p2 - q1
        if mode != 0:
            rr = q1 * q1 + q2 * q2
            if rr < r0sq:
                s = rr / r0sq
                v = k * (aa + s * (bb + cc * s))
                g = k * (bb + 2.0 * cc * s) * 2.0 / r0sq
            else:
                v = a * rr ** (-0.5 * alpha)
                g = -a * alpha * rr ** (-0.5 * alpha - 1.0)
            if mode == 1:
                gq1 -= g * q1
                gq2 -= g * q2
            else:
                r = math.sqrt(rr)
                e = 0.5 * (p1 * p1 + p2 * p2) + p1 * q2 - p2 * q1
                x0 = beta * (r - R1)
                c0 = _chi(x0)
                d0 = beta * _dchi(x0)
                x1 = e - supv - c
                c1 = _chi(x1)
                d1 = _dchi(x1)
                phi = c0 * c1
                damp = 1.0 - v * c0 * d1
                rad = v * c1 * d0 / r if (d0 != 0.0 and r > 0.0) else 0.0
                gq1 = damp * gq1 - phi * g * q1 - rad * q1
                gq2 = damp * gq2 - phi * g * q2 - rad * q2
                gp1 *= damp
                gp2 *= damp
        return (gp1, gp2, -gq1, -gq2)

    return field


def _stage(field, y, h, ks, coeffs):
    z = list(y)
    for kv, cf in zip(ks, coeffs):
        if cf != 0.0:
            for i in range(4):
                z[i] += h * cf * kv[i]
    return field(z)


def _step(field, y, h):
    k1 = field(y)
    k2 = _stage(field, y, h, (k1,), A2)
    k3 = _stage(field, y, h, (k1, k2), A3)
    k4 = _stage(field, y, h, (k1, k2, k3), A4)
    k5 = _stage(field, y, h, (k1, k2, k3, k4), A5)
    k6 = _stage(field, y, h, (k1, k2, k3, k4, k5), A6)
    ks = (k1, k2, k3, k4, k5, k6)
    y4 = [y[i] + h * sum(B4[j] * ks[j][i] for j in range(6)) for i in range(4)]
    y5 = [y[i] + h * sum(B5[j] * ks[j][i] for j in range(6)) for i in range(4)]
    return y4, y5


def integrate_field(field, x0, T, n_out=2, atol=1e-12, rtol=1e-12, max_steps=1_000_000,
                    fixed_steps=0):
    """Integrate x' = field(x) over [0, T]; return (samples, steps, status).

    ``samples`` has shape ``(n_out, 4)`` at uniform times.  With
    ``fixed_steps > 0`` each output interval is split into that many equal
    steps and no error control is applied.
    """
    y = [float(v) for v in x0]
    out = np.empty((n_out, 4))
    out[0] = y
    if n_out < 2:
        return out, 0, OK
    T = float(T)
    if T == 0.0:
        out[:] = y
        return out, 0, OK
    seg = T / (n_out - 1)
    steps = 0
    h = math.copysign(min(abs(seg), 0.05), T)
    for j in range(1, n_out):
        if fixed_steps > 0:
            hs = seg / fixed_steps
            for _ in range(fixed_steps):
                y, _ = _step(field, y, hs)
                steps += 1
            out[j] = y
            continue
        t_left = seg
        while t_left != 0.0:
            if steps >= max_steps:
                out[j:] = np.nan
                return out, steps, MAX_STEPS
            last = abs(h) >= abs(t_left)
            hs = t_left if last else h
            y4, y5 = _step(field, y, hs)
            err = 0.0
            for i in range(4):
                sc = atol + rtol * max(abs(y[i]), abs(y4[i]))
                err = max(err, abs(y5[i] - y4[i]) / sc)
            if not math.isfinite(err):
                out[j:] = np.nan
                return out, steps, NONFINITE
            steps += 1
            if err <= 1.0:
                y = y4
                t_left = 0.0 if last else t_left - hs
                fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                if not last or fac < 1.0:
                    h = hs * fac
            else:
                h = hs * max(0.2, 0.9 * err ** -0.2)
                if abs(h) < 1e-14 * max(1.0, abs(T)):
                    out[j:] = np.nan
                    return out, steps, UNDERFLOW
        out[j] = y
    return out, steps, OK


def integrate(mode, params, x0, T, n_out=2, atol=1e-12, rtol=1e-12, max_steps=1_000_000,
              fixed_steps=0):
    return integrate_field(make_field(int(mode), params), x0, T, n_out, atol, rtol,
                           max_steps, fixed_steps)
