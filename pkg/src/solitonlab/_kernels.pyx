# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Dormand–Prince step for the built-in fields.

System ids and state layouts (last components are attached quadratures):

0  T-formulation   y = (H, H', F, F', f, f', s)        s' = H
1  S-formulation   y = (a, a', b, b', phi, phi', t)    t' = 1/sqrt(a)
2  reduced system  y = (X2, Y1, Y2, int X2, int X2^2)

Parameters are (lam, m, q, k) for systems 0 and 1 and (m, k) for system 2.
Stage and error arithmetic mirrors ``_dopri.py`` term by term.
"""
import numpy as np
from libc.math cimport sqrt, fabs, isfinite, INFINITY

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double D1 = -12715105075.0 / 11282082432, D3 = 87487479700.0 / 32700410799
cdef double D4 = -10690763975.0 / 1880347072, D5 = 701980252875.0 / 199316789632
cdef double D6 = -1453857185.0 / 822651844, D7 = 69997945.0 / 29380423


cdef void field_t(const double* p, const double* y, double* out) noexcept nogil:
    cdef double lam = p[0], m = p[1], q = p[2], k = p[3]
    cdef double H = y[0], dH = y[1], F = y[2], dF = y[3], df = y[5]
    cdef double F2 = F * F
    cdef double F4 = F2 * F2
    cdef double ddH = H * (2 * m * q * q * H * H / F4 - 2 * m * dH * dF / (H * F) + df * dH / H - lam)
    cdef double ddF = F * (k / F2 - 2 * q * q * H * H / F4 - (2 * m - 1) * (dF / F) * (dF / F)
                           - dH * dF / (F * H) + df * dF / F - lam)
    out[0] = dH
    out[1] = ddH
    out[2] = dF
    out[3] = ddF
    out[4] = df
    out[5] = lam + ddH / H + 2 * m * ddF / F
    out[6] = H


cdef void field_s(const double* p, const double* y, double* out) noexcept nogil:
    cdef double lam = p[0], m = p[1], q = p[2], k = p[3]
    cdef double a = y[0], da = y[1], b = y[2], db = y[3], dphi = y[5]
    cdef double dda = 4 * m * q * q * a / (b * b) - m * da * db / b + dphi * da - 2 * lam
    cdef double ddb = (2 * k / a - 4 * q * q / b + (1 - m) * db * db / b - da * db / a
                       + dphi * db - 2 * lam * b / a)
    out[0] = da
    out[1] = dda
    out[2] = db
    out[3] = ddb
    out[4] = dphi
    out[5] = m * (ddb / b - db * db / (2 * b * b) + 2 * q * q / (b * b))
    out[6] = 1.0 / sqrt(a)


cdef void field_special(const double* p, const double* y, double* out) noexcept nogil:
    cdef double r2m = sqrt(2 * p[0]), k = p[1]
    cdef double x2 = y[0], y1 = y[1], y2 = y[2]
    cdef double x2sq = x2 * x2
    out[0] = x2 * (x2sq - 1) + k * y2 * y2 / r2m
    out[1] = y1 * x2sq
    out[2] = y2 * (x2sq - x2 / r2m)
    out[3] = x2
    out[4] = x2sq


cdef inline void call_field(int system, const double* p, const double* y, double* out) noexcept nogil:
    if system == 0:
        field_t(p, y, out)
    elif system == 1:
        field_s(p, y, out)
    else:
        field_special(p, y, out)


def rhs(int system, double[::1] p, double t, double[::1] y):
    out = np.empty(y.shape[0])
    cdef double[::1] o = out
    call_field(system, &p[0], &y[0], &o[0])
    return out


def dopri_step(int system, double[::1] p, double t, const double[::1] y,
               const double[::1] k1, double h, double rtol, double atol):
    cdef Py_ssize_t n = y.shape[0], i
    cdef double[8][8] kbuf  # stages 2..7 (n <= 8)
    cdef double[8] tmp
    cdef double[8] ynew
    cdef double err = 0.0, sc, ei, ay, ayn, ydiff, bspl
    if n > 8:
        raise ValueError("state too large for compiled kernel")

    for i in range(n):
        tmp[i] = y[i] + h * (A21 * k1[i])
    call_field(system, &p[0], tmp, kbuf[2])
    for i in range(n):
        tmp[i] = y[i] + h * (A31 * k1[i] + A32 * kbuf[2][i])
    call_field(system, &p[0], tmp, kbuf[3])
    for i in range(n):
        tmp[i] = y[i] + h * (A41 * k1[i] + A42 * kbuf[2][i] + A43 * kbuf[3][i])
    call_field(system, &p[0], tmp, kbuf[4])
    for i in range(n):
        tmp[i] = y[i] + h * (A51 * k1[i] + A52 * kbuf[2][i] + A53 * kbuf[3][i] + A54 * kbuf[4][i])
    call_field(system, &p[0], tmp, kbuf[5])
    for i in range(n):
        tmp[i] = y[i] + h * (A61 * k1[i] + A62 * kbuf[2][i] + A63 * kbuf[3][i]
                             + A64 * kbuf[4][i] + A65 * kbuf[5][i])
    call_field(system, &p[0], tmp, kbuf[6])
    for i in range(n):
        ynew[i] = y[i] + h * (A71 * k1[i] + A73 * kbuf[3][i] + A74 * kbuf[4][i]
                              + A75 * kbuf[5][i] + A76 * kbuf[6][i])
    call_field(system, &p[0], ynew, kbuf[7])

    for i in range(n):
        ei = h * (E1 * k1[i] + E3 * kbuf[3][i] + E4 * kbuf[4][i] + E5 * kbuf[5][i]
                  + E6 * kbuf[6][i] + E7 * kbuf[7][i])
        ay = fabs(y[i])
        ayn = fabs(ynew[i])
        sc = atol + rtol * (ay if ay > ayn else ayn)
        ei = fabs(ei) / sc
        if not isfinite(ei) or not isfinite(ynew[i]) or not isfinite(kbuf[7][i]):
            err = INFINITY
        elif ei > err:
            err = ei

    y_out = np.empty(n)
    k7_out = np.empty(n)
    rc_out = np.empty((5, n))
    cdef double[::1] yo = y_out
    cdef double[::1] ko = k7_out
    cdef double[:, ::1] rc = rc_out
    for i in range(n):
        yo[i] = ynew[i]
        ko[i] = kbuf[7][i]
        ydiff = ynew[i] - y[i]
        bspl = h * k1[i] - ydiff
        rc[0, i] = y[i]
        rc[1, i] = ydiff
        rc[2, i] = bspl
        rc[3, i] = ydiff - h * kbuf[7][i] - bspl
        rc[4, i] = h * (D1 * k1[i] + D3 * kbuf[3][i] + D4 * kbuf[4][i] + D5 * kbuf[5][i]
                        + D6 * kbuf[6][i] + D7 * kbuf[7][i])
    return y_out, k7_out, err, rc_out
