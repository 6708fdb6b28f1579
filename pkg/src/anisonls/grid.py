"""Periodic grids, complex lattice fields and the unitary spectral transform.

Conventions
-----------
Space samples are ``x_j = -l + j*h`` with ``h = 2l/n``; frequency samples are
``xi_k = pi*k/l`` for ``k = -n/2 .. n/2-1`` (natural, negative-to-positive
order).  The transform is the unitary pairing

    psi_hat(xi) = (2 pi)^(-d/2) * integral exp(-i x.xi) psi(x) dx

approximated by the rectangle rule, so Parseval holds without weights.

Arrays are stored with shape ``(n2, n1)`` in 2D (``x1`` varies fastest in
row-major order) and ``(n1,)`` in 1D.
"""

from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from . import kernels

__all__ = [
    "Domain",
    "GridSpec",
    "Field",
    "NormSpec",
    "forward_transform",
    "inverse_transform",
    "norm",
    "mass",
    "inner",
    "apply_anisotropic_bessel",
    "boundary_mass",
    "resize",
    "write_snapshot",
    "read_snapshot",
    "set_fft_workers",
]

_FFT_WORKERS = 1


def set_fft_workers(n: int) -> None:
    """Number of threads handed to scipy.fft (the ``--threads`` CLI flag)."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


def fftn(a, overwrite=False):
    return sfft.fftn(a, overwrite_x=overwrite, workers=_FFT_WORKERS)


def ifftn(a, overwrite=False):
    return sfft.ifftn(a, overwrite_x=overwrite, workers=_FFT_WORKERS)


class Domain(enum.Enum):
    SPACE = 0
    FREQUENCY = 1


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-l1, l1) x [-l2, l2)``.

    For ``d == 1`` the second axis is dropped (``n2`` is forced to 1).
    """

    n1: int
    l1: float
    n2: int = 1
    l2: float = 1.0
    d: int = 2

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.d}")
        if self.d == 1:
            object.__setattr__(self, "n2", 1)
        if not _is_pow2(self.n1) or self.n1 < 2:
            raise ValueError(f"n1 must be a power of two >= 2, got {self.n1}")
        if self.d == 2 and (not _is_pow2(self.n2) or self.n2 < 2):
            raise ValueError(f"n2 must be a power of two >= 2, got {self.n2}")
        if not self.l1 > 0 or (self.d == 2 and not self.l2 > 0):
            raise ValueError("half-extents must be positive")

    @classmethod
    def square(cls, n: int, l: float, d: int = 2) -> "GridSpec":
        return cls(n1=n, l1=l, n2=n, l2=l, d=d)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n1,) if self.d == 1 else (self.n2, self.n1)

    @property
    def size(self) -> int:
        return self.n1 * self.n2

    @property
    def ns(self) -> tuple[int, ...]:
        return (self.n1,) if self.d == 1 else (self.n1, self.n2)

    @property
    def ls(self) -> tuple[float, ...]:
        return (self.l1,) if self.d == 1 else (self.l1, self.l2)

    @property
    def steps(self) -> tuple[float, ...]:
        return tuple(2.0 * l / n for n, l in zip(self.ns, self.ls))

    @property
    def cell(self) -> float:
        """Space quadrature weight h1*h2."""
        return math.prod(self.steps)

    @property
    def dual_cell(self) -> float:
        """Frequency quadrature weight (pi/l1)*(pi/l2)."""
        return math.prod(math.pi / l for l in self.ls)

    def x(self, axis: int = 0) -> np.ndarray:
        n, l = self.ns[axis], self.ls[axis]
        return -l + (2.0 * l / n) * np.arange(n)

    def xi(self, axis: int = 0) -> np.ndarray:
        n, l = self.ns[axis], self.ls[axis]
        return (math.pi / l) * (np.arange(n) - n // 2)

    def xi_fft(self, axis: int = 0) -> np.ndarray:
        """Frequencies in FFT (unshifted) order; an exact permutation of :meth:`xi`."""
        return sfft.ifftshift(self.xi(axis))

    def mesh(self, kind: str = "x") -> tuple[np.ndarray, ...]:
        """Broadcastable coordinate arrays (no full meshgrid is materialised)."""
        get = {"x": self.x, "xi": self.xi, "xi_fft": self.xi_fft}[kind]
        if self.d == 1:
            return (get(0),)
        return get(0)[None, :], get(1)[:, None]

    def with_sizes(self, n1: int, n2: int | None = None) -> "GridSpec":
        """Same spacing, different point counts (so different extents)."""
        h = self.steps
        if self.d == 1:
            return GridSpec(n1=n1, l1=n1 * h[0] / 2, d=1)
        n2 = self.n2 if n2 is None else n2
        return GridSpec(n1=n1, l1=n1 * h[0] / 2, n2=n2, l2=n2 * h[1] / 2, d=2)


@dataclass(frozen=True, eq=False)
class Field:
    """Complex lattice function on a grid, tagged with its domain.

    ``values`` is exposed as a read-only view; operations always return new
    fields.
    """

    grid: GridSpec
    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.size != self.grid.size:
            raise ValueError(f"values length {v.size} != n1*n2 = {self.grid.size}")
        # read-only view; the array handed in must not be mutated afterwards
        v = v.reshape(self.grid.shape).view()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: GridSpec, domain: Domain = Domain.SPACE) -> "Field":
        return cls(grid, domain, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: GridSpec, fn, domain: Domain = Domain.SPACE) -> "Field":
        """Sample ``fn(*coords)`` on the space (or frequency) lattice."""
        coords = grid.mesh("x" if domain is Domain.SPACE else "xi")
        vals = np.broadcast_to(fn(*coords), grid.shape)
        return cls(grid, domain, np.array(vals, dtype=np.complex128))

    def _new(self, values, domain=None) -> "Field":
        return Field(self.grid, self.domain if domain is None else domain, values)

    def __add__(self, other: "Field") -> "Field":
        _check_same(self, other)
        return self._new(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same(self, other)
        return self._new(self.values - other.values)

    def __mul__(self, c) -> "Field":
        return self._new(self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self._new(-self.values)


def _check_same(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    if a.domain is not b.domain:
        raise ValueError("fields live in different domains")


def _require(f: Field, domain: Domain) -> None:
    if f.domain is not domain:
        raise ValueError(f"expected a {domain.name.lower()}-domain field, got {f.domain.name.lower()}")


def _axes(grid: GridSpec) -> tuple[int, ...]:
    return tuple(range(grid.d))


def forward_transform(f: Field) -> Field:
    """Space -> frequency with the unitary ``(2pi)^(-d/2)`` convention."""
    _require(f, Domain.SPACE)
    g = f.grid
    ax = _axes(g)
    out = sfft.fftshift(fftn(sfft.ifftshift(f.values, axes=ax)), axes=ax)
    out *= g.cell / (2.0 * math.pi) ** (g.d / 2)
    return Field(g, Domain.FREQUENCY, out)


def inverse_transform(f: Field) -> Field:
    """Frequency -> space, exact inverse of :func:`forward_transform`."""
    _require(f, Domain.FREQUENCY)
    g = f.grid
    ax = _axes(g)
    out = sfft.fftshift(ifftn(sfft.ifftshift(f.values, axes=ax)), axes=ax)
    out *= (2.0 * math.pi) ** (g.d / 2) / g.cell
    return Field(g, Domain.SPACE, out)


def to_space(f: Field) -> Field:
    return f if f.domain is Domain.SPACE else inverse_transform(f)


def to_frequency(f: Field) -> Field:
    return f if f.domain is Domain.FREQUENCY else forward_transform(f)


def apply_multiplier(f: Field, symbol: np.ndarray) -> Field:
    """Apply a Fourier multiplier given on the natural-order frequency lattice.

    The result is returned in the same domain as ``f``.
    """
    if f.domain is Domain.FREQUENCY:
        return f._new(f.values * symbol)
    ax = _axes(f.grid)
    sym = sfft.ifftshift(np.broadcast_to(symbol, f.grid.shape), axes=ax)
    return f._new(ifftn(fftn(f.values) * sym, overwrite=True))


def apply_anisotropic_bessel(f: Field, s: float) -> Field:
    """Apply ``<d/dx1>^s``: multiply by ``(1 + xi1^2)^(s/2)`` in frequency."""
    if s == 0:
        return f
    xi1 = f.grid.mesh("xi")[0]
    return apply_multiplier(f, (1.0 + xi1 * xi1) ** (0.5 * s))


@dataclass(frozen=True)
class NormSpec:
    """Which norm :func:`norm` computes.

    ``kind`` is one of ``"lp"`` (plain L^p), ``"sobolev"`` (weighted
    ``||<x>^s <grad>^m f||_{L^2}``) or ``"bessel"`` (``||<d/dx1>^s f||_{L^p}``).
    """

    kind: str
    p: float = 2.0
    m: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        if self.kind not in ("lp", "sobolev", "bessel"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if not (self.p >= 1):
            raise ValueError(f"L^p exponent must satisfy p >= 1, got {self.p}")

    @classmethod
    def lp(cls, p: float = 2.0) -> "NormSpec":
        return cls("lp", p=p)

    @classmethod
    def sobolev(cls, m: float, s: float) -> "NormSpec":
        return cls("sobolev", m=m, s=s)

    @classmethod
    def bessel(cls, s: float, p: float = 2.0) -> "NormSpec":
        return cls("bessel", p=p, s=s)


def _lp(values: np.ndarray, weight: float, p: float) -> float:
    a = np.abs(values)
    if math.isinf(p):
        return float(a.max()) if a.size else 0.0
    if p == 2:
        return math.sqrt(kernels.abs2_sum(values) * weight)
    return float((np.sum(a**p) * weight) ** (1.0 / p))


def norm(f: Field, spec: NormSpec = NormSpec.lp(2.0)) -> float:
    """Grid quadrature (rectangle rule) of the requested norm."""
    g = f.grid
    if spec.kind == "lp":
        w = g.cell if f.domain is Domain.SPACE else g.dual_cell
        return _lp(f.values, w, spec.p)
    if spec.kind == "bessel":
        return _lp(to_space(apply_anisotropic_bessel(f, spec.s)).values, g.cell, spec.p)
    # weighted Sobolev
    u = to_frequency(f)
    if spec.m != 0:
        xi = g.mesh("xi")
        r2 = sum(c * c for c in xi)
        u = u._new(u.values * (1.0 + r2) ** (0.5 * spec.m))
    u = to_space(u)
    vals = u.values
    if spec.s != 0:
        x = g.mesh("x")
        r2 = sum(c * c for c in x)
        vals = vals * (1.0 + r2) ** (0.5 * spec.s)
    return _lp(vals, g.cell, 2.0)


def mass(f: Field) -> float:
    """Squared L^2 norm."""
    w = f.grid.cell if f.domain is Domain.SPACE else f.grid.dual_cell
    return kernels.abs2_sum(f.values) * w


def inner(f: Field, g: Field) -> complex:
    """``<f, g> = integral f * conj(g)`` by the rectangle rule."""
    _check_same(f, g)
    w = f.grid.cell if f.domain is Domain.SPACE else f.grid.dual_cell
    return complex(np.vdot(g.values, f.values)) * w


def boundary_mass(f: Field, band: float = 0.1) -> float:
    """Fraction of L^2 mass with some |x_i| >= (1 - band) * l_i (space domain)."""
    _require(f, Domain.SPACE)
    return _band_fraction(f.values, f.grid, 1.0 - band)


def _band_fraction(values: np.ndarray, grid: GridSpec, inner_frac: float, axes=None) -> float:
    a2 = values.real**2 + values.imag**2
    total = a2.sum()
    if total == 0:
        return 0.0
    inside = np.ones(grid.shape, dtype=bool)
    coords = grid.mesh("x")
    for i in range(grid.d) if axes is None else axes:
        inside = inside & (np.abs(coords[i]) < inner_frac * grid.ls[i])
    return float(a2[~inside].sum() / total)


def outer_half_fraction(values: np.ndarray, grid: GridSpec, axis: int) -> float:
    """Mass fraction outside the central half along one axis."""
    return _band_fraction(values, grid, 0.5, axes=(axis,))


def _resize_array(values: np.ndarray, grid: GridSpec, new: GridSpec) -> np.ndarray:
    out = np.zeros(new.shape, dtype=np.complex128)
    src, dst = [], []
    for n_old, n_new in zip(grid.shape, new.shape):
        if n_new <= n_old:
            off = (n_old - n_new) // 2
            src.append(slice(off, off + n_new))
            dst.append(slice(0, n_new))
        else:
            off = (n_new - n_old) // 2
            src.append(slice(0, n_old))
            dst.append(slice(off, off + n_old))
    out[tuple(dst)] = values[tuple(src)]
    return out


def resize(f: Field, n1: int, n2: int | None = None) -> Field:
    """Crop or zero-pad a space field about the origin, keeping the spacing.

    Cropping discards the outer samples, padding extends by zeros; both are
    exact up to the mass outside the smaller box.
    """
    _require(f, Domain.SPACE)
    new = f.grid.with_sizes(n1, n2)
    return Field(new, Domain.SPACE, _resize_array(f.values, f.grid, new))


# -- binary snapshot format --------------------------------------------------

MAGIC = b"ADSP"
VERSION = 1
_HEADER = struct.Struct("<4sIIIIddB")


def write_snapshot(path, f: Field) -> None:
    """Write the ``ADSP`` binary snapshot (little-endian, x1 fastest)."""
    g = f.grid
    l2 = g.l2 if g.d == 2 else 0.0
    header = _HEADER.pack(MAGIC, VERSION, g.d, g.n1, g.n2, g.l1, l2, f.domain.value)
    payload = np.ascontiguousarray(f.values, dtype="<c16").reshape(-1)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def read_snapshot(path) -> Field:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated snapshot header")
    magic, version, d, n1, n2, l1, l2, dom = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    grid = GridSpec(n1=n1, l1=l1, d=d) if d == 1 else GridSpec(n1=n1, l1=l1, n2=n2, l2=l2, d=d)
    count = n1 * n2
    body = raw[_HEADER.size:]
    if len(body) != 16 * count:
        raise ValueError(f"payload has {len(body)} bytes, expected {16 * count}")
    vals = np.frombuffer(body, dtype="<c16").astype(np.complex128).reshape(grid.shape)
    return Field(grid, Domain(dom), vals)
