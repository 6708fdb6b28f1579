"""Log-corrected asymptotic profile for the quadratic nonlinearity.

Given scattering data ``psi_hat_plus`` and coupling ``lam``, the phase
correction is ``S(t, xi) = -lam |psi_hat_plus(xi)| (3 xi1^2 + 1)^(-1/2) log t``;
the corrected free data is ``w = psi_hat_plus * exp(iS)`` and the profile
``u_plus`` is the stationary-phase principal term with ``S`` added to the
phase.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .amplitudes import Amplitude, as_amplitude
from .grid import Domain, Field, GridSpec, NormSpec, boundary_mass, inverse_transform, norm
from .propagator import propagate
from .stationary import _profile_pieces

__all__ = [
    "ProfileSpec",
    "phase_correction",
    "modified_free_data",
    "duhamel_source_data",
    "modified_profile",
    "h2_xi_norm",
    "log_growth_ratio",
    "residual_source",
    "IllConditionedDerivativeWarning",
]

T_MIN_PROFILE = 3.0


@dataclass
class ProfileSpec:
    """Scattering data and nonlinearity.

    Parameters
    ----------
    psi_plus_hat : Amplitude, Field or callable
        Frequency amplitude of the final state.
    lam : float
        Real coupling in front of ``|u|^(p-1) u``.
    p : float
        Nonlinearity power (2 for the long-range case in 2D).
    d : int
        Spatial dimension.
    """

    psi_plus_hat: object
    lam: float = 0.5
    p: float = 2.0
    d: int = 2

    def __post_init__(self):
        self.psi_plus_hat = as_amplitude(self.psi_plus_hat, d=self.d)
        if self.p < 1:
            raise ValueError("nonlinearity power must be >= 1")

    @property
    def amplitude(self) -> Amplitude:
        return self.psi_plus_hat


class IllConditionedDerivativeWarning(RuntimeWarning):
    """Second xi-derivatives of the data are not resolved by the grid."""


def _sample(spec: ProfileSpec, grid: GridSpec):
    xi = [grid.xi(i) for i in range(grid.d)]
    vals = spec.amplitude.on_mesh(*xi)
    xi1 = xi[0] if grid.d == 1 else xi[0][None, :]
    return xi1, vals


def _phase(abs_vals, xi1, t: float, lam: float):
    return -lam * abs_vals / np.sqrt(3.0 * xi1 * xi1 + 1.0) * math.log(t)


def phase_correction(xi, t: float, spec: ProfileSpec):
    """``S(t, xi)`` at a frequency point (or broadcastable arrays)."""
    if not t > 0:
        raise ValueError("phase correction needs t > 0")
    if isinstance(xi, (tuple, list)) or (isinstance(xi, np.ndarray) and xi.ndim == 1 and xi.size == spec.d):
        xi = [np.asarray(c, dtype=float) for c in xi]
    else:
        xi = [np.asarray(xi, dtype=float)]
    a = np.abs(spec.amplitude(*xi))
    out = _phase(a, xi[0], t, spec.lam)
    return float(out) if np.ndim(out) == 0 else out


def modified_free_data(t: float, spec: ProfileSpec, grid: GridSpec) -> Field:
    """``w(t) = psi_hat_plus * exp(i S(t))`` on the frequency lattice."""
    if not t > 0:
        raise ValueError("modified free data needs t > 0")
    xi1, vals = _sample(spec, grid)
    a = np.abs(vals)
    return Field(grid, Domain.FREQUENCY, vals * np.exp(1j * _phase(a, xi1, t, spec.lam)))


def duhamel_source_data(t: float, spec: ProfileSpec, grid: GridSpec) -> Field:
    """``t^-1 (3 xi1^2 + 1)^(-1/2) |psi_hat_plus| w(t)``; the time derivative of
    ``w`` is ``-i lam`` times this."""
    xi1, vals = _sample(spec, grid)
    a = np.abs(vals)
    wgt = a / np.sqrt(3.0 * xi1 * xi1 + 1.0)
    return Field(grid, Domain.FREQUENCY, (wgt / t) * vals * np.exp(1j * _phase(a, xi1, t, spec.lam)))


def modified_profile(t: float, spec: ProfileSpec, grid: GridSpec) -> Field:
    """Profile ``u_plus(t, x)`` at every space-grid point (``t >= 3``)."""
    if t < T_MIN_PROFILE:
        raise ValueError(f"profile is defined for t >= {T_MIN_PROFILE}, got {t}")
    mu1, mu_perp, vals, w, ph = _profile_pieces(spec.amplitude, t, grid)
    mu1b = mu1 if grid.d == 1 else mu1[None, :]
    ph = ph + _phase(np.abs(vals), mu1b, t, spec.lam)
    out = kernels.polar(np.broadcast_to(w, grid.shape), np.broadcast_to(ph, grid.shape)) * vals
    return Field(grid, Domain.SPACE, out)


def h2_xi_norm(g: Field) -> float:
    """``||(1 - Laplacian_xi) g||_{L^2_xi}`` computed spectrally.

    Derivatives in ``xi`` become multiplication by ``|x|^2`` after the inverse
    transform, so this is the ``<x>^2``-weighted L^2 norm of ``F^{-1} g``.
    """
    if g.domain is not Domain.FREQUENCY:
        raise ValueError("h2_xi_norm expects frequency-domain data")
    f = inverse_transform(g)
    b = boundary_mass(f)
    if b > 1e-8:
        warnings.warn(
            f"xi-derivatives under-resolved (outer-band mass {b:.2e} of the inverse transform)",
            IllConditionedDerivativeWarning,
            stacklevel=2,
        )
    return norm(f, NormSpec.sobolev(0.0, 2.0))


def log_growth_ratio(t: float, spec: ProfileSpec, grid: GridSpec) -> tuple[float, float]:
    """H^2_xi norms of ``w(t)`` and of the source data, each divided by ``(log t)^2``."""
    if t < T_MIN_PROFILE:
        raise ValueError(f"growth ratio is defined for t >= {T_MIN_PROFILE}, got {t}")
    L2 = math.log(t) ** 2
    w = modified_free_data(t, spec, grid)
    src = duhamel_source_data(t, spec, grid) * t
    return h2_xi_norm(w) / L2, h2_xi_norm(src) / L2


def residual_source(t: float, spec: ProfileSpec, grid: GridSpec):
    """Mismatch between the projected source and the nonlinearity along ``W(t) F^{-1} w``.

    Returns the space field
    ``W(t) F^{-1}[lam h(t)] - lam |W(t) F^{-1} w| W(t) F^{-1} w`` and its L^2 norm,
    where ``h`` is :func:`duhamel_source_data`.  Quadratic nonlinearity only.
    """
    if t < T_MIN_PROFILE:
        raise ValueError(f"residual source is defined for t >= {T_MIN_PROFILE}, got {t}")
    if spec.p != 2:
        raise ValueError("residual source is implemented for p = 2 only")
    if spec.lam == 0:
        z = Field.zeros(grid)
        return z, 0.0
    first = propagate(inverse_transform(duhamel_source_data(t, spec, grid) * spec.lam), t)
    v = propagate(inverse_transform(modified_free_data(t, spec, grid)), t)
    second = v._new(spec.lam * kernels.power_nonlinearity(v.values, 2.0))
    r = first - second
    return r, norm(r)
