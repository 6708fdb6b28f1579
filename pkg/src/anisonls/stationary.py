"""Stationary point of the dispersive phase and the leading asymptotic term.

For ``x.xi - t*omega(xi)`` the stationary frequency solves
``mu1^3 + mu1 = x1/t`` and ``mu_perp = x_perp/t``; the principal term of
``W(t)psi`` there is

    t^(-d/2) (3 mu1^2 + 1)^(-1/2) psi_hat(mu) exp(i(3/4 t mu1^4 + 1/2 t |mu|^2) - i d pi/4).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .amplitudes import as_amplitude
from .grid import Domain, Field, GridSpec, boundary_mass, forward_transform, norm, to_space
from .propagator import BOUNDARY_TOL, WrapAroundWarning, propagate

__all__ = [
    "StationaryPoint",
    "cubic_root",
    "stationary_point",
    "stationary_points",
    "leading_term",
    "leading_term_field",
    "remainder_field",
]

T_MIN_ASYMPTOTIC = 2.0


def cubic_root(v):
    """Unique real root of ``mu^3 + mu = v`` (vectorised, cancellation-free)."""
    v = np.asarray(v, dtype=float)
    return kernels.cubic_root(v).reshape(v.shape) if v.ndim else float(kernels.cubic_root(v.reshape(1))[0])


@dataclass(frozen=True)
class StationaryPoint:
    mu1: float
    mu_perp: tuple
    residual: float

    @property
    def mu2(self) -> float:
        return self.mu_perp[0] if self.mu_perp else 0.0

    @property
    def mu(self) -> tuple:
        return (self.mu1, *self.mu_perp)

    @property
    def hessian_weight(self) -> float:
        """``3 mu1^2 + 1``, the curvature of the phase along x1."""
        return 3.0 * self.mu1 * self.mu1 + 1.0


def stationary_point(x, t: float) -> StationaryPoint:
    """Stationary frequency for the space-time point ``(t, x)``.

    Parameters
    ----------
    x : float or sequence of float
        Space point; the first coordinate is the anisotropic direction.
    t : float
        Time, must be positive.

    Returns
    -------
    StationaryPoint
        ``mu1`` (real root of the cubic), ``mu_perp = x_perp / t`` and the
        absolute residual ``|mu1^3 + mu1 - x1/t|``.
    """
    if not t > 0:
        raise ValueError(f"stationary point needs t > 0, got {t}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    v = x[0] / t
    m = cubic_root(v)
    res = abs((m * m + 1.0) * m - v)
    return StationaryPoint(m, tuple(float(c / t) for c in x[1:]), res)


def stationary_points(x1, t: float, *x_perp):
    """Vectorised version: returns ``(mu1, *mu_perp)`` arrays."""
    if not t > 0:
        raise ValueError(f"stationary point needs t > 0, got {t}")
    return (cubic_root(np.asarray(x1, dtype=float) / t), *(np.asarray(c, dtype=float) / t for c in x_perp))


def _check_time(t):
    if t < T_MIN_ASYMPTOTIC:
        raise ValueError(f"asymptotic formulas are used for t >= {T_MIN_ASYMPTOTIC}, got {t}")


def leading_term(psi_hat, t: float, x, d: int | None = None) -> complex:
    """Principal stationary-phase term of ``W(t)psi`` at one point.

    Works in any dimension ``d >= 1`` provided ``psi_hat`` accepts ``d``
    coordinates.
    """
    _check_time(t)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    d = x.size if d is None else d
    if x.size != d:
        raise ValueError(f"point has {x.size} coordinates, expected {d}")
    amp = as_amplitude(psi_hat, d=d)
    sp = stationary_point(x, t)
    mu = np.array(sp.mu)
    val = complex(amp(*[np.asarray(c) for c in mu]))
    phase = 0.75 * t * sp.mu1**4 + 0.5 * t * float(mu @ mu) - d * math.pi / 4
    return t ** (-d / 2) / math.sqrt(sp.hessian_weight) * val * complex(math.cos(phase), math.sin(phase))


def _profile_pieces(amp, t: float, grid: GridSpec):
    """Stationary points, amplitude, modulus weight and phase on the grid."""
    x = [grid.x(i) for i in range(grid.d)]
    mu1 = cubic_root(x[0] / t)
    mu_perp = [c / t for c in x[1:]]
    vals = amp.on_mesh(mu1, *mu_perp)
    w1 = t ** (-grid.d / 2) / np.sqrt(3.0 * mu1 * mu1 + 1.0)
    ph1 = 0.75 * t * mu1**4 + 0.5 * t * mu1 * mu1 - grid.d * math.pi / 4
    if grid.d == 1:
        return mu1, mu_perp, vals, w1, ph1
    ph = ph1[None, :] + (0.5 * t * mu_perp[0] ** 2)[:, None]
    return mu1, mu_perp, vals, np.broadcast_to(w1[None, :], grid.shape), ph


def leading_term_field(psi_hat, t: float, grid: GridSpec) -> Field:
    """The principal term evaluated at every space-grid point."""
    _check_time(t)
    amp = as_amplitude(psi_hat, d=grid.d)
    _, _, vals, w, ph = _profile_pieces(amp, t, grid)
    out = kernels.polar(np.broadcast_to(w, grid.shape), np.broadcast_to(ph, grid.shape)) * vals
    return Field(grid, Domain.SPACE, out)


def remainder_field(psi: Field, t: float, amplitude=None):
    """``W(t)psi`` minus its principal term, and the L^2 norm of the difference.

    ``amplitude`` supplies off-grid values of ``psi_hat``; by default the
    transform of ``psi`` is spline-interpolated.
    """
    _check_time(t)
    psi = to_space(psi)
    amp = as_amplitude(forward_transform(psi) if amplitude is None else amplitude, d=psi.grid.d)
    u = propagate(psi, t)
    b = boundary_mass(u)
    if b > BOUNDARY_TOL:
        warnings.warn(f"boundary mass {b:.2e} at t={t:g}", WrapAroundWarning, stacklevel=2)
    r = u - leading_term_field(amp, t, psi.grid)
    return r, norm(r)
