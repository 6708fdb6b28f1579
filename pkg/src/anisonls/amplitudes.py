"""Frequency amplitudes psi_hat that can be evaluated at off-grid points.

The stationary-phase formulas need psi_hat at the continuum point mu(x, t),
never at a lattice frequency, so every amplitude is a callable
``amp(xi1, xi2)`` (``amp(xi1)`` in 1D) that broadcasts like numpy.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import RectBivariateSpline, make_interp_spline
from scipy.special import erfcinv

from .grid import Domain, Field, GridSpec

__all__ = ["Amplitude", "GaussianAmplitude", "GridAmplitude", "CallableAmplitude", "as_amplitude"]


class InterpolationError(ValueError):
    """Off-grid evaluation of a sampled amplitude produced non-finite values."""


class Amplitude:
    d = 2

    def __call__(self, xi1, xi2=None):
        raise NotImplementedError

    def on_mesh(self, m1: np.ndarray, m2: np.ndarray | None = None) -> np.ndarray:
        """Values on the tensor product of two sorted 1D arrays, shape (len(m2), len(m1))."""
        if self.d == 1:
            return np.asarray(self(m1), dtype=np.complex128)
        return np.asarray(self(m1[None, :], m2[:, None]), dtype=np.complex128)

    def sample(self, grid: GridSpec) -> Field:
        """The amplitude on the frequency lattice of ``grid``."""
        xi = [grid.xi(i) for i in range(grid.d)]
        return Field(grid, Domain.FREQUENCY, self.on_mesh(*xi))


class GaussianAmplitude(Amplitude):
    """``a * exp(-(xi1-c1)^2/(2 s1^2) - (xi2-c2)^2/(2 s2^2))``.

    Everything the lab needs about this datum is available in closed form:
    the space profile, L^2 and H^{0,2} norms, and the Fresnel-Gauss integral
    in the xi2 direction used by the quadrature oracle.
    """

    def __init__(self, a: float = 1.0, sigma=1.0, center=(0.0, 0.0), d: int = 2):
        self.a = float(a)
        s = (sigma, sigma) if np.isscalar(sigma) else tuple(sigma)
        c = (center, 0.0) if np.isscalar(center) else tuple(center)
        self.s1, self.s2 = float(s[0]), float(s[1])
        self.c1, self.c2 = float(c[0]), float(c[1])
        self.d = d
        if self.s1 <= 0 or self.s2 <= 0:
            raise ValueError("Gaussian widths must be positive")

    def __repr__(self):
        return f"GaussianAmplitude(a={self.a!r}, sigma=({self.s1!r}, {self.s2!r}), d={self.d})"

    @classmethod
    def with_h02_norm(cls, target: float, sigma=0.5, d: int = 2) -> "GaussianAmplitude":
        """Centred Gaussian scaled so that ||psi||_{H^{0,2}} equals ``target``."""
        unit = cls(1.0, sigma, d=d)
        return cls(target / unit.h02_norm(), sigma, d=d)

    # -- evaluation ----------------------------------------------------------
    def factor1(self, xi1):
        return self.a * np.exp(-((xi1 - self.c1) ** 2) / (2 * self.s1**2))

    def factor2(self, xi2):
        return np.exp(-((xi2 - self.c2) ** 2) / (2 * self.s2**2))

    def __call__(self, xi1, xi2=None):
        if self.d == 1:
            return self.factor1(np.asarray(xi1, dtype=float)).astype(np.complex128)
        return (self.factor1(np.asarray(xi1, dtype=float)) * self.factor2(np.asarray(xi2, dtype=float))).astype(
            np.complex128
        )

    def on_mesh(self, m1, m2=None):
        f1 = self.factor1(m1).astype(np.complex128)
        if self.d == 1:
            return f1
        return f1[None, :] * self.factor2(m2)[:, None]

    def space_function(self, *x):
        """Inverse transform in closed form: psi(x)."""
        out = self.a * self.s1 * np.exp(1j * self.c1 * x[0] - 0.5 * (self.s1 * x[0]) ** 2)
        if self.d == 2:
            out = out * self.s2 * np.exp(1j * self.c2 * x[1] - 0.5 * (self.s2 * x[1]) ** 2)
        return out

    def space_field(self, grid: GridSpec) -> Field:
        return Field.from_function(grid, self.space_function)

    def xi2_integral(self, t: float, x2):
        """``integral exp(i x2 xi2 - i t xi2^2/2) * factor2(xi2) d xi2`` exactly."""
        A = 1.0 / (2 * self.s2**2) + 0.5j * t
        B = 1j * np.asarray(x2, dtype=float) + self.c2 / self.s2**2
        C = -(self.c2**2) / (2 * self.s2**2)
        return np.sqrt(np.pi / A) * np.exp(B * B / (4 * A) + C)

    # -- closed-form norms and extents ----------------------------------------
    def l2_norm(self) -> float:
        v = self.a**2 * self.s1 * math.sqrt(math.pi)
        if self.d == 2:
            v *= self.s2 * math.sqrt(math.pi)
        return math.sqrt(v)

    def h02_norm(self) -> float:
        """``||(1 - Laplacian_xi) psi_hat||_{L^2}``; independent of the centre."""
        sq = math.sqrt(math.pi)
        al = [1 / self.s1**2] + ([1 / self.s2**2] if self.d == 2 else [])
        c = 1.0 + sum(al)
        # moments of exp(-u^2): int 1 = sq, int u^2 = sq/2, int u^4 = 3 sq/4
        val = c * c - c * sum(al) + 0.75 * sum(a * a for a in al)
        if self.d == 2:
            val += 0.5 * al[0] * al[1]
        val *= self.a**2 * sq**self.d * self.s1 * (self.s2 if self.d == 2 else 1.0)
        return math.sqrt(val)

    def radius(self, eps: float = 1e-14, axis: int = 0) -> float:
        """Frequency radius beyond which |psi_hat| < eps * max|psi_hat|."""
        s, c = (self.s1, self.c1) if axis == 0 else (self.s2, self.c2)
        return abs(c) + s * math.sqrt(2 * math.log(1 / eps))

    def tail_radius(self, tail: float, axis: int = 0) -> float:
        """Radius outside which the fraction of |psi_hat|^2 along ``axis`` is below ``tail``."""
        s, c = (self.s1, self.c1) if axis == 0 else (self.s2, self.c2)
        return abs(c) + s * float(erfcinv(tail))

    def space_radius(self, tail: float, axis: int = 0) -> float:
        s = self.s1 if axis == 0 else self.s2
        return float(erfcinv(tail)) / s


class GridAmplitude(Amplitude):
    """Separable cubic-spline interpolation of a frequency-domain field.

    Points outside the sampled frequency box evaluate to zero.
    """

    def __init__(self, f: Field):
        if f.domain is not Domain.FREQUENCY:
            raise ValueError("GridAmplitude needs a frequency-domain field")
        self.field = f
        self.grid = f.grid
        self.d = f.grid.d
        g = f.grid
        v = f.values
        self._lo = [g.xi(i)[0] for i in range(g.d)]
        self._hi = [g.xi(i)[-1] for i in range(g.d)]
        if g.d == 1:
            self._re = make_interp_spline(g.xi(0), v.real, k=3)
            self._im = make_interp_spline(g.xi(0), v.imag, k=3)
        else:
            self._re = RectBivariateSpline(g.xi(1), g.xi(0), v.real, kx=3, ky=3)
            self._im = RectBivariateSpline(g.xi(1), g.xi(0), v.imag, kx=3, ky=3)

    def _inside(self, *xi):
        m = True
        for i, c in enumerate(xi):
            m = m & (c >= self._lo[i]) & (c <= self._hi[i])
        return m

    def _finish(self, out):
        if not np.all(np.isfinite(out)):
            raise InterpolationError("spline evaluation of the amplitude is not finite")
        return out

    def __call__(self, xi1, xi2=None):
        xi1 = np.asarray(xi1, dtype=float)
        if self.d == 1:
            out = self._re(xi1) + 1j * self._im(xi1)
            return self._finish(np.where(self._inside(xi1), out, 0.0))
        xi1, xi2 = np.broadcast_arrays(xi1, np.asarray(xi2, dtype=float))
        out = self._re.ev(xi2, xi1) + 1j * self._im.ev(xi2, xi1)
        return self._finish(np.where(self._inside(xi1, xi2), out, 0.0))

    def on_mesh(self, m1, m2=None):
        if self.d == 1:
            return self(m1)
        out = self._re(m2, m1, grid=True) + 1j * self._im(m2, m1, grid=True)
        inside = self._inside(m1[None, :], m2[:, None])
        return self._finish(np.where(inside, out, 0.0))


class CallableAmplitude(Amplitude):
    """Wraps ``fn(*xi)``; any dimension ``d`` (the grid-free formulas accept d >= 3)."""

    def __init__(self, fn, d: int = 2):
        self.fn = fn
        self.d = d

    def __call__(self, *xi):
        xi = [c for c in xi if c is not None]
        return np.asarray(self.fn(*xi), dtype=np.complex128)


def as_amplitude(obj, d: int = 2) -> Amplitude:
    if isinstance(obj, Amplitude):
        return obj
    if isinstance(obj, Field):
        return GridAmplitude(obj if obj.domain is Domain.FREQUENCY else _fwd(obj))
    if callable(obj):
        return CallableAmplitude(obj, d=d)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a frequency amplitude")


def _fwd(f):
    from .grid import forward_transform

    return forward_transform(f)
