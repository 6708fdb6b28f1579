"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``ANISONLS_PURE_PYTHON=1`` to force the numpy path.  All functions take
arrays of any shape; they are flattened (views, never copies) before being
handed to the backend, so inputs must be C-contiguous.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("ANISONLS_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"


def _flat(a):
    if not a.flags.c_contiguous:
        raise ValueError("kernel inputs must be C-contiguous")
    return a.reshape(-1)


def nonlinear_phase_(u, coeff, p, impl=None):
    """In place: u *= exp(-1j * coeff * |u|**(p-1))."""
    (impl or _impl).nonlinear_phase(_flat(u), float(coeff), float(p))
    return u


def power_nonlinearity(u, p, impl=None):
    """Return |u|**(p-1) * u."""
    u = np.ascontiguousarray(u, dtype=np.complex128)
    out = np.empty_like(u)
    (impl or _impl).power_nonlinearity(_flat(u), float(p), _flat(out))
    return out


def cubic_root(v, impl=None):
    """Unique real root of mu**3 + mu = v, elementwise."""
    v = np.ascontiguousarray(v, dtype=np.float64)
    out = np.empty_like(v)
    (impl or _impl).cubic_root(_flat(v), _flat(out))
    return out


def polar(amp, phase, impl=None):
    """Return amp * exp(1j*phase) for real arrays of equal shape."""
    amp = np.ascontiguousarray(amp, dtype=np.float64)
    phase = np.ascontiguousarray(phase, dtype=np.float64)
    if amp.shape != phase.shape:
        amp, phase = np.broadcast_arrays(amp, phase)
        amp = np.ascontiguousarray(amp)
        phase = np.ascontiguousarray(phase)
    out = np.empty(amp.shape, dtype=np.complex128)
    (impl or _impl).polar(_flat(amp), _flat(phase), _flat(out))
    return out


def abs2_sum(u, impl=None):
    """Sum of |u|**2 over all entries."""
    u = np.ascontiguousarray(u, dtype=np.complex128)
    return float((impl or _impl).abs2_sum(_flat(u)))
