# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled embedded Runge-Kutta (Fehlberg 4(5)) integrator.

Same algorithm, modes and parameters as the pure-Python module
``_kernel_py``; see there for the description.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs, fmin, fmax, copysign, isfinite, NAN

cnp.import_array()

DEF OK = 0
DEF MAX_STEPS = 1
DEF UNDERFLOW = 2
DEF NONFINITE = 3

ctypedef struct Params:
    int mode
    double a, alpha, r0, R1, beta, supv, c
    double k, aa, bb, cc, r0sq


cdef inline double chi(double x) noexcept nogil:
    if x <= 0.0:
        return 1.0
    if x >= 1.0:
        return 0.0
    return 1.0 - x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


cdef inline double dchi(double x) noexcept nogil:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -30.0 * x * x * (1.0 - x) * (1.0 - x)


cdef void field(const Params* P, const double* x, double* out) noexcept nogil:
    cdef double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3]
    cdef double gq1 = -p2, gq2 = p1, gp1 = p1 + q2, gp2 = p2 - q1
    cdef double rr, s, v, g, r, e, x0, c0, d0, x1, c1, d1, phi, damp, rad
    if P.mode != 0:
        rr = q1 * q1 + q2 * q2
        if rr < P.r0sq:
            s = rr / P.r0sq
            v = P.k * (P.aa + s * (P.bb + P.cc * s))
            g = P.k * (P.bb + 2.0 * P.cc * s) * 2.0 / P.r0sq
        else:
            v = P.a * pow(rr, -0.5 * P.alpha)
            g = -P.a * P.alpha * pow(rr, -0.5 * P.alpha - 1.0)
        if P.mode == 1:
            gq1 -= g * q1
            gq2 -= g * q2
        else:
            r = sqrt(rr)
            e = 0.5 * (p1 * p1 + p2 * p2) + p1 * q2 - p2 * q1
            x0 = P.beta * (r - P.R1)
            c0 = chi(x0)
            d0 = P.beta * dchi(x0)
            x1 = e - P.supv - P.c
            c1 = chi(x1)
            d1 = dchi(x1)
            phi = c0 * c1
            damp = 1.0 - v * c0 * d1
            rad = 0.0
            if d0 != 0.0 and r > 0.0:
                rad = v * c1 * d0 / r
            gq1 = damp * gq1 - phi * g * q1 - rad * q1
            gq2 = damp * gq2 - phi * g * q2 - rad * q2
            gp1 *= damp
            gp2 *= damp
    out[0] = gp1
    out[1] = gp2
    out[2] = -gq1
    out[3] = -gq2


cdef void rkf_step(const Params* P, const double* y, double h, double* y4, double* y5) noexcept nogil:
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double k5[4]
    cdef double k6[4]
    cdef double z[4]
    cdef int i
    field(P, y, k1)
    for i in range(4):
        z[i] = y[i] + h * 0.25 * k1[i]
    field(P, z, k2)
    for i in range(4):
        z[i] = y[i] + h * (3.0 / 32.0 * k1[i] + 9.0 / 32.0 * k2[i])
    field(P, z, k3)
    for i in range(4):
        z[i] = y[i] + h * (1932.0 / 2197.0 * k1[i] - 7200.0 / 2197.0 * k2[i]
                           + 7296.0 / 2197.0 * k3[i])
    field(P, z, k4)
    for i in range(4):
        z[i] = y[i] + h * (439.0 / 216.0 * k1[i] - 8.0 * k2[i] + 3680.0 / 513.0 * k3[i]
                           - 845.0 / 4104.0 * k4[i])
    field(P, z, k5)
    for i in range(4):
        z[i] = y[i] + h * (-8.0 / 27.0 * k1[i] + 2.0 * k2[i] - 3544.0 / 2565.0 * k3[i]
                           + 1859.0 / 4104.0 * k4[i] - 11.0 / 40.0 * k5[i])
    field(P, z, k6)
    for i in range(4):
        y4[i] = y[i] + h * (25.0 / 216.0 * k1[i] + 1408.0 / 2565.0 * k3[i]
                            + 2197.0 / 4104.0 * k4[i] - 0.2 * k5[i])
        y5[i] = y[i] + h * (16.0 / 135.0 * k1[i] + 6656.0 / 12825.0 * k3[i]
                            + 28561.0 / 56430.0 * k4[i] - 9.0 / 50.0 * k5[i]
                            + 2.0 / 55.0 * k6[i])


cdef int run(const Params* P, double* y, double T, int n_out, double atol, double rtol,
             long max_steps, int fixed_steps, double* out, long* nsteps) noexcept nogil:
    cdef double seg = T / (n_out - 1)
    cdef double h = copysign(fmin(fabs(seg), 0.05), T)
    cdef double t_left, hs, err, sc, fac
    cdef double y4[4]
    cdef double y5[4]
    cdef int j, i, m, last
    cdef long steps = 0
    for i in range(4):
        out[i] = y[i]
    for j in range(1, n_out):
        if fixed_steps > 0:
            hs = seg / fixed_steps
            for m in range(fixed_steps):
                rkf_step(P, y, hs, y4, y5)
                for i in range(4):
                    y[i] = y4[i]
                steps += 1
            for i in range(4):
                out[4 * j + i] = y[i]
            continue
        t_left = seg
        while t_left != 0.0:
            if steps >= max_steps:
                nsteps[0] = steps
                return MAX_STEPS
            last = fabs(h) >= fabs(t_left)
            hs = t_left if last else h
            rkf_step(P, y, hs, y4, y5)
            err = 0.0
            for i in range(4):
                sc = atol + rtol * fmax(fabs(y[i]), fabs(y4[i]))
                err = fmax(err, fabs(y5[i] - y4[i]) / sc)
            if not isfinite(err):
                nsteps[0] = steps
                return NONFINITE
            steps += 1
            if err <= 1.0:
                for i in range(4):
                    y[i] = y4[i]
                t_left = 0.0 if last else t_left - hs
                fac = 5.0 if err == 0.0 else fmin(5.0, fmax(0.2, 0.9 * pow(err, -0.2)))
                if not last or fac < 1.0:
                    h = hs * fac
            else:
                h = hs * fmax(0.2, 0.9 * pow(err, -0.2))
                if fabs(h) < 1e-14 * fmax(1.0, fabs(T)):
                    nsteps[0] = steps
                    return UNDERFLOW
        for i in range(4):
            out[4 * j + i] = y[i]
    nsteps[0] = steps
    return OK


def integrate(int mode, params, x0, double T, int n_out=2, double atol=1e-12,
              double rtol=1e-12, long max_steps=1000000, int fixed_steps=0):
    """Integrate the selected field over [0, T]; return (samples, steps, status)."""
    cdef double[:] pv = np.ascontiguousarray(params, dtype=np.float64)
    cdef Params P
    P.mode = mode
    P.a = pv[0]
    P.alpha = pv[1]
    P.r0 = pv[2]
    P.R1 = pv[3]
    P.beta = pv[4]
    P.supv = pv[5]
    P.c = pv[6]
    P.k = P.a * pow(P.r0, -P.alpha) if P.a != 0.0 else 0.0
    P.cc = P.alpha * (P.alpha + 2.0) / 8.0
    P.bb = -P.alpha * (P.alpha + 4.0) / 4.0
    P.aa = 1.0 + (P.alpha * P.alpha + 6.0 * P.alpha) / 8.0
    P.r0sq = P.r0 * P.r0
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((max(n_out, 1), 4))
    cdef double y[4]
    cdef double[:] xv = np.ascontiguousarray(x0, dtype=np.float64)
    cdef int i, status = OK
    cdef long steps = 0
    for i in range(4):
        y[i] = xv[i]
    if n_out < 2 or T == 0.0:
        for i in range(out.shape[0]):
            out[i, 0] = y[0]
            out[i, 1] = y[1]
            out[i, 2] = y[2]
            out[i, 3] = y[3]
        return out, 0, OK
    cdef double* op = <double*> out.data
    with nogil:
        status = run(&P, y, T, n_out, atol, rtol, max_steps, fixed_steps, op, &steps)
    if status != OK:
        out[1:] = np.nan
    return out, steps, status
