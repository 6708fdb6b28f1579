"""Pure numpy versions of the compiled kernels (same signatures, same semantics)."""

import numpy as np


def nonlinear_phase(u, coeff, p):
    a2 = u.real * u.real + u.imag * u.imag
    if p == 2.0:
        a = np.sqrt(a2)
    elif p == 3.0:
        a = a2
    else:
        a = np.power(a2, 0.5 * (p - 1.0))
    a *= coeff
    u *= np.cos(a) - 1j * np.sin(a)


def power_nonlinearity(u, p, out):
    a2 = u.real * u.real + u.imag * u.imag
    if p == 2.0:
        a = np.sqrt(a2)
    else:
        a = np.power(a2, 0.5 * (p - 1.0))
    np.multiply(u, a, out=out)


def cubic_root(v, out):
    ax = np.abs(v)
    q = 0.5 * ax
    with np.errstate(over="ignore"):
        disc = np.where(q < 1e150, np.sqrt(q * q + 1.0 / 27.0), q)
    r = np.cbrt(q + disc)
    r2 = r * r
    mu = ax / (r2 + 1.0 / (9.0 * r2) + 1.0 / 3.0)
    f = (mu * mu + 1.0) * mu - ax
    mu = mu - f / (3.0 * mu * mu + 1.0)
    np.copysign(mu, v, out=out)


def polar(amp, phase, out):
    out.real = amp * np.cos(phase)
    out.imag = amp * np.sin(phase)


def abs2_sum(u):
    return float(np.vdot(u, u).real)
