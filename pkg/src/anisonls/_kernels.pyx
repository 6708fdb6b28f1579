# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pointwise kernels.

Every routine works on flat, C-contiguous buffers and mirrors the numpy
implementation in ``_kernels_py`` exactly (same argument order, same
in-place semantics).
"""

from libc.math cimport sqrt, cbrt, cos, sin, fabs, pow, copysign


def nonlinear_phase(double complex[::1] u, double coeff, double p):
    """u[i] *= exp(-1j * coeff * |u[i]|**(p - 1)), in place."""
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double re, im, a, th, c, s
    cdef double half_pm1 = 0.5 * (p - 1.0)
    cdef int mode = 0
    if p == 2.0:
        mode = 2
    elif p == 3.0:
        mode = 3
    for i in range(n):
        re = u[i].real
        im = u[i].imag
        if mode == 2:
            a = sqrt(re * re + im * im)
        elif mode == 3:
            a = re * re + im * im
        else:
            a = pow(re * re + im * im, half_pm1)
        th = coeff * a
        c = cos(th)
        s = sin(th)
        u[i].real = re * c + im * s
        u[i].imag = im * c - re * s


def power_nonlinearity(const double complex[::1] u, double p, double complex[::1] out):
    """out[i] = |u[i]|**(p - 1) * u[i]."""
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double re, im, a
    cdef double half_pm1 = 0.5 * (p - 1.0)
    for i in range(n):
        re = u[i].real
        im = u[i].imag
        if p == 2.0:
            a = sqrt(re * re + im * im)
        else:
            a = pow(re * re + im * im, half_pm1)
        out[i].real = a * re
        out[i].imag = a * im


def cubic_root(const double[::1] v, double[::1] out):
    """Real root of mu**3 + mu = v, cancellation-free Cardano plus one Newton step."""
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double x, ax, q, disc, r, r2, mu, f
    cdef double third = 1.0 / 3.0
    cdef double inv27 = 1.0 / 27.0
    for i in range(n):
        x = v[i]
        ax = fabs(x)
        q = 0.5 * ax
        if q < 1e150:
            disc = sqrt(q * q + inv27)
        else:
            disc = q
        r = cbrt(q + disc)
        r2 = r * r
        # mu = r - 1/(3r) rewritten as |v| / (r^2 + 1/(9 r^2) + 1/3)
        mu = ax / (r2 + 1.0 / (9.0 * r2) + third)
        f = (mu * mu + 1.0) * mu - ax
        mu = mu - f / (3.0 * mu * mu + 1.0)
        out[i] = copysign(mu, x)


def polar(const double[::1] amp, const double[::1] phase, double complex[::1] out):
    """out[i] = amp[i] * exp(1j * phase[i])."""
    cdef Py_ssize_t i, n = amp.shape[0]
    cdef double a, ph
    for i in range(n):
        a = amp[i]
        ph = phase[i]
        out[i].real = a * cos(ph)
        out[i].imag = a * sin(ph)


def abs2_sum(const double complex[::1] u):
    """Sum of |u[i]|**2."""
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double acc = 0.0
    for i in range(n):
        acc += u[i].real * u[i].real + u[i].imag * u[i].imag
    return acc
