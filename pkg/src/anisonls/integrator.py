"""Strang-split time integration of

    i u_t + 1/2 Lap u - 1/4 d^4/dx1^4 u = lam |u|^(p-1) u

on the periodic grid.  The linear substep is the exact multiplier of
:mod:`propagator`; the nonlinear substep is the exact constant-modulus phase
rotation.  Both are isometries, so mass is conserved up to roundoff.

Long runs resize the box on the fly (same spacing): the central half is kept
when the outer half carries less than ``crop_tol`` of the mass, and the box is
doubled when the outer band carries more than ``grow_tol``.  Mass removed by
cropping is accounted for in the drift check.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from . import kernels
from .grid import (
    Domain,
    Field,
    GridSpec,
    _band_fraction,
    _resize_array,
    fftn,
    forward_transform,
    ifftn,
    inner,
    inverse_transform,
    mass as _mass,
    norm,
    outer_half_fraction,
    to_space,
)
from .profile import ProfileSpec, duhamel_source_data, modified_free_data, modified_profile
from .propagator import _omega, phase_factor, propagate, propagate_values

__all__ = [
    "SolverConfig",
    "TrajectoryRecord",
    "MassDriftError",
    "NumericalError",
    "FinalStateDivergence",
    "ConfigurationError",
    "mass",
    "nonlinear_phase_step",
    "strang_step",
    "solve_ivp",
    "solve_final_state",
    "picard_refine",
    "PicardResult",
]

log = logging.getLogger(__name__)


class ConfigurationError(ValueError):
    pass


class NumericalError(RuntimeError):
    """Non-finite values appeared; ``record`` holds the trajectory so far."""

    def __init__(self, message, record=None):
        super().__init__(message)
        self.record = record


class MassDriftError(NumericalError):
    pass


class FinalStateDivergence(RuntimeError):
    def __init__(self, message, lam, psi_norm, record=None):
        super().__init__(message)
        self.lam = lam
        self.psi_norm = psi_norm
        self.record = record


@dataclass(frozen=True)
class SolverConfig:
    """Integrator settings.

    Parameters
    ----------
    dt : float
        Base step (positive; the direction comes from ``t_start``/``t_end``).
    t_start, t_end : float
        Integration window.
    lam, p : float
        Coupling and power of the nonlinearity.
    dealias : bool
        Apply a 2/3-rule mask after every nonlinear substep.  The mask is not
        an isometry, so loosen ``tol_mass_drift`` when using it.
    tol_mass_drift : float
        Allowed relative mass change over the run.
    record_times : tuple of float, optional
        Times at which summaries are recorded (steps are shortened to hit them).
    record_stride : int
        Additionally record every ``record_stride`` base steps (0 disables).
    profile_times : tuple of float, optional
        Times at which pulled-back snapshots ``W(-t)u(t)`` are stored on the
        profile grid (needed by :func:`picard_refine` and pairing series).
    profile_size : tuple of int
        Point counts of the profile grid (a central crop of the solver grid).
    crop_tol, grow_tol : float
        Box-resizing thresholds (0 disables).
    box_check_every : int
        Steps between box checks.
    max_points : int
        Growth stops at this many grid points.
    store_fields : bool
        Keep full space fields at record times.
    """

    dt: float = 0.5
    t_start: float = 0.0
    t_end: float = 10.0
    lam: float = 0.5
    p: float = 2.0
    dealias: bool = False
    tol_mass_drift: float = 1e-10
    record_times: tuple | None = None
    record_stride: int = 0
    profile_times: tuple | None = None
    profile_size: tuple = (128, 128)
    crop_tol: float = 0.0
    grow_tol: float = 0.0
    box_check_every: int = 8
    max_points: int = 1 << 24
    store_fields: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if self.p < 1:
            raise ConfigurationError(f"nonlinearity power must be >= 1, got {self.p}")


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    boundary: list = field(default_factory=list)
    l2_dist_to_profile: list = field(default_factory=list)
    l2_dist_to_free: list = field(default_factory=list)
    grids: list = field(default_factory=list)
    fields: list = field(default_factory=list)
    profile_grid: GridSpec | None = None
    profile_times: list = field(default_factory=list)
    pullbacks: list = field(default_factory=list)
    pulled_nonlinearity: list = field(default_factory=list)
    final: Field | None = None
    steps: int = 0
    meta: dict = field(default_factory=dict)

    CSV_COLUMNS = ("t", "mass", "linf", "l2_dist_to_profile", "l2_dist_to_free")

    def rows(self):
        return list(zip(self.times, self.mass, self.linf, self.l2_dist_to_profile, self.l2_dist_to_free))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.CSV_COLUMNS)
            for r in self.rows():
                w.writerow([repr(float(v)) for v in r])

    def series(self, name: str, t_min=-math.inf, t_max=math.inf):
        """``(times, values)`` arrays of one summary column restricted to a window."""
        t = np.asarray(self.times)
        v = np.asarray(getattr(self, name), dtype=float)
        m = (t >= t_min - 1e-9) & (t <= t_max + 1e-9)
        o = np.argsort(t[m])
        return t[m][o], v[m][o]

    def pullback(self, t: float) -> np.ndarray:
        k = _find_time(self.profile_times, t)
        return self.pullbacks[k]


def _find_time(times, t, rtol=1e-9):
    for k, s in enumerate(times):
        if abs(s - t) <= rtol * max(1.0, abs(t)):
            return k
    raise KeyError(f"no stored snapshot at t={t}")


def mass(f: Field) -> float:
    """``||f||_{L^2}^2`` by grid quadrature."""
    return _mass(f)


def nonlinear_phase_step(f: Field, dt: float, lam: float, p: float = 2.0) -> Field:
    """Exact flow of ``i u_t = lam |u|^(p-1) u`` over ``dt`` (pointwise phase)."""
    if p < 1:
        raise ConfigurationError(f"nonlinearity power must be >= 1, got {p}")
    if f.domain is not Domain.SPACE:
        raise ValueError("nonlinear substep needs a space-domain field")
    v = np.array(f.values, dtype=np.complex128, order="C")
    if lam != 0 and dt != 0:
        kernels.nonlinear_phase_(v, lam * dt, p)
    return f._new(v)


@lru_cache(maxsize=8)
def _dealias_mask(grid: GridSpec) -> np.ndarray:
    m = np.ones(grid.shape, dtype=bool)
    for ax, n in enumerate(reversed(grid.ns) if grid.d == 2 else grid.ns):
        k = np.abs(np.fft.fftfreq(n) * n)
        keep = k <= n / 3.0
        shape = [1] * grid.d
        shape[ax] = n
        m = m & keep.reshape(shape)
    m.setflags(write=False)
    return m


def _linear_factor(grid: GridSpec, h: float, dealias: bool) -> np.ndarray:
    e = phase_factor(h, _omega(grid, "fft"))
    if dealias:
        e *= _dealias_mask(grid)
    return e


def strang_step(f: Field, dt: float, cfg: SolverConfig) -> Field:
    """One ``W(dt/2) N(dt) W(dt/2)`` step (``dt`` may be negative)."""
    if dt == 0:
        return f
    u = to_space(f)
    g = u.grid
    half = _linear_factor(g, 0.5 * dt, False)
    v = fftn(u.values)
    v *= half
    w = ifftn(v, overwrite=True)
    if cfg.lam != 0:
        kernels.nonlinear_phase_(w, cfg.lam * dt, cfg.p)
    v = fftn(w, overwrite=True)
    v *= _linear_factor(g, 0.5 * dt, cfg.dealias)
    out = u._new(ifftn(v, overwrite=True))
    return out if f.domain is Domain.SPACE else forward_transform(out)


# -- the marcher ---------------------------------------------------------------


class _State:
    """Mutable integration state (never shared between trajectories)."""

    def __init__(self, u: Field, t: float):
        self.values = np.array(u.values, dtype=np.complex128, order="C")
        self.grid = u.grid
        self.t = t
        self.removed = 0.0
        self.steps = 0

    def field(self) -> Field:
        return Field(self.grid, Domain.SPACE, self.values.copy())


def _stops(t0: float, t1: float, cfg: SolverConfig, extra=()):
    sgn = 1.0 if t1 >= t0 else -1.0
    lo, hi = min(t0, t1), max(t0, t1)
    pts = {t1}
    for seq in (cfg.record_times or (), cfg.profile_times or (), extra):
        for s in seq:
            if lo - 1e-12 <= s <= hi + 1e-12 and abs(s - t0) > 1e-12:
                pts.add(float(s))
    if cfg.record_stride > 0:
        k = 1
        while True:
            s = t0 + sgn * k * cfg.record_stride * cfg.dt
            if sgn * (s - t1) >= -1e-12:
                break
            pts.add(s)
            k += 1
    return sorted(pts, key=lambda s: sgn * s)


def _march(st: _State, t1: float, cfg: SolverConfig, min_shape) -> None:
    """Advance ``st`` to ``t1`` with merged Strang steps of equal length."""
    span = t1 - st.t
    if span == 0:
        return
    n = max(1, int(math.ceil(abs(span) / cfg.dt - 1e-9)))
    h = span / n
    coeff = cfg.lam * h
    full = None
    v = fftn(st.values, overwrite=True)
    v *= _linear_factor(st.grid, 0.5 * h, False)
    u = ifftn(v, overwrite=True)
    for k in range(n):
        if coeff != 0:
            kernels.nonlinear_phase_(u, coeff, cfg.p)
        last = k == n - 1
        if not last and (cfg.crop_tol or cfg.grow_tol) and (st.steps + 1) % max(1, cfg.box_check_every) == 0:
            if _resize_box(st, u, cfg, min_shape):
                u = st.values
                full = None
        v = fftn(u, overwrite=True)
        if last:
            v *= _linear_factor(st.grid, 0.5 * h, cfg.dealias)
        else:
            if full is None:
                full = _linear_factor(st.grid, h, cfg.dealias)
            v *= full
        u = ifftn(v, overwrite=True)
        st.steps += 1
    st.values = u
    st.t = t1


def _resize_box(st: _State, u: np.ndarray, cfg: SolverConfig, min_shape) -> bool:
    """Crop or grow the box in place; returns True when the grid changed.

    ``u`` is the current sample array (it becomes ``st.values``).
    """
    g = st.grid
    ns = list(g.ns)
    changed = False
    for ax in range(g.d):
        if cfg.crop_tol and ns[ax] // 2 >= min_shape[ax] and outer_half_fraction(u, g, ax) < cfg.crop_tol:
            ns[ax] //= 2
            changed = True
        elif cfg.grow_tol and _band_fraction(u, g, 0.9, axes=(ax,)) > cfg.grow_tol:
            if math.prod(ns) * 2 <= cfg.max_points:
                ns[ax] *= 2
                changed = True
            else:
                warnings.warn("box growth stopped at max_points", RuntimeWarning, stacklevel=3)
    if not changed:
        st.values = u
        return False
    new = g.with_sizes(*ns)
    before = kernels.abs2_sum(u) * g.cell
    vals = _resize_array(u, g, new)
    after = kernels.abs2_sum(vals) * new.cell
    st.removed += before - after
    st.values = np.ascontiguousarray(vals)
    st.grid = new
    log.debug("box resized to %s at t=%.4g", new.shape, st.t)
    return True


def _integrate(u0: Field, t0: float, t1: float, cfg: SolverConfig, spec: ProfileSpec | None = None,
               extra_stops=()) -> TrajectoryRecord:
    u0 = to_space(u0)
    st = _State(u0, t0)
    rec = TrajectoryRecord()
    rec.meta.update(t_start=t0, t_end=t1, dt=cfg.dt, lam=cfg.lam, p=cfg.p)
    pshape = tuple(min(a, b) for a, b in zip(cfg.profile_size, u0.grid.ns))
    if cfg.profile_times:
        rec.profile_grid = u0.grid.with_sizes(*pshape)
    m0 = _mass(u0)
    ptimes = sorted(cfg.profile_times or ())

    def observe():
        f = Field(st.grid, Domain.SPACE, st.values.copy())
        m = _mass(f)
        if not math.isfinite(m):
            raise NumericalError(f"non-finite field at t={st.t:g}", rec)
        drift = abs(m + st.removed - m0) / m0 if m0 > 0 else 0.0
        rec.times.append(st.t)
        rec.mass.append(m)
        rec.linf.append(float(np.abs(f.values).max()))
        rec.boundary.append(_band_fraction(f.values, st.grid, 0.9))
        rec.grids.append(st.grid)
        dp = df = math.nan
        if spec is not None and abs(st.t) >= 3:
            dp = norm(f - modified_profile(abs(st.t), spec, st.grid))
            free = propagate(inverse_transform(modified_free_data(abs(st.t), spec, st.grid)), st.t)
            df = norm(f - free)
        rec.l2_dist_to_profile.append(dp)
        rec.l2_dist_to_free.append(df)
        if cfg.store_fields:
            rec.fields.append(f)
        if any(abs(st.t - s) <= 1e-9 * max(1.0, abs(s)) for s in ptimes):
            _store_pullback(rec, st, cfg)
        if drift > cfg.tol_mass_drift:
            raise MassDriftError(f"relative mass drift {drift:.3e} at t={st.t:g} exceeds {cfg.tol_mass_drift:g}", rec)

    observe()
    checked = 0
    for s in _stops(t0, t1, cfg, extra_stops):
        if (cfg.crop_tol or cfg.grow_tol) and st.steps - checked >= cfg.box_check_every:
            _resize_box(st, st.values, cfg, pshape)
            checked = st.steps
        _march(st, s, cfg, pshape)
        observe()
    rec.final = st.field()
    rec.steps = st.steps
    rec.meta["removed_mass"] = st.removed
    rec.meta["final_shape"] = st.grid.shape
    return rec


def _store_pullback(rec: TrajectoryRecord, st: _State, cfg: SolverConfig) -> None:
    pg = rec.profile_grid
    z = propagate_values(st.values, st.grid, -st.t)
    nl = kernels.power_nonlinearity(st.values, cfg.p)
    nz = propagate_values(nl, st.grid, -st.t)
    rec.profile_times.append(st.t)
    rec.pullbacks.append(_resize_array(z, st.grid, pg))
    rec.pulled_nonlinearity.append(_resize_array(nz, st.grid, pg))


def solve_ivp(u0: Field, cfg: SolverConfig, spec: ProfileSpec | None = None) -> TrajectoryRecord:
    """March ``u0`` (given at ``cfg.t_start``) to ``cfg.t_end``.

    Parameters
    ----------
    u0 : Field
        Initial data (either domain).
    cfg : SolverConfig
        Step size, window, nonlinearity and recording options.
    spec : ProfileSpec, optional
        When given, distances to the modified profile and to the corrected
        free evolution are recorded for ``|t| >= 3``.

    Returns
    -------
    TrajectoryRecord

    Raises
    ------
    MassDriftError
        If the relative mass change exceeds ``cfg.tol_mass_drift``.
    NumericalError
        If non-finite values appear.
    """
    return _integrate(u0, cfg.t_start, cfg.t_end, cfg, spec)


def final_state_seed(spec: ProfileSpec, T: float, grid: GridSpec, seed: str = "free") -> Field:
    """Data at the large time ``T``: ``W(T) F^-1 w(T)`` or the profile ``u_plus(T)``."""
    if seed == "free":
        return propagate(inverse_transform(modified_free_data(T, spec, grid)), T)
    if seed == "profile":
        return modified_profile(T, spec, grid)
    raise ConfigurationError(f"unknown seed {seed!r} (expected 'free' or 'profile')")


def solve_final_state(spec: ProfileSpec, T: float, t_end: float, cfg: SolverConfig, grid: GridSpec,
                      seed: str = "free", compare_seeds: bool = False) -> TrajectoryRecord:
    """Backward solve from the asymptotic state at ``T`` down to ``t_end``.

    Parameters
    ----------
    spec : ProfileSpec
        Scattering data and nonlinearity (``cfg.lam``/``cfg.p`` are overridden
        by ``spec``).
    T : float
        Seed time, ``T > t_end``.
    t_end : float
        Final (earliest) time, ``>= 3``.
    cfg : SolverConfig
        Step and recording options.
    grid : GridSpec
        Solver grid at time ``T``.
    seed : {"free", "profile"}
        Which asymptotic state seeds the solve.
    compare_seeds : bool
        Also solve from the other seed and store the L^2 distance between the
        two trajectories at every record time in ``meta["seed_gap"]``.

    Returns
    -------
    TrajectoryRecord
        With ``l2_dist_to_profile`` and ``l2_dist_to_free`` filled in.

    Raises
    ------
    FinalStateDivergence
        When the backward solve loses mass control or produces non-finite values.
    """
    if not T > t_end >= 3:
        raise ConfigurationError(f"need T > t_end >= 3, got T={T}, t_end={t_end}")
    cfg = replace(cfg, lam=spec.lam, p=spec.p, t_start=T, t_end=t_end)
    psi_norm = spec.amplitude.h02_norm() if hasattr(spec.amplitude, "h02_norm") else math.nan

    def run(which):
        u0 = final_state_seed(spec, T, grid, which)
        try:
            return _integrate(u0, T, t_end, cfg, spec)
        except NumericalError as exc:
            raise FinalStateDivergence(
                f"backward solve failed for lam={spec.lam}, |psi|={psi_norm:.3g}: {exc}", spec.lam, psi_norm, exc.record
            ) from exc

    rec = run(seed)
    rec.meta.update(seed=seed, T=T, psi_h02=psi_norm)
    if compare_seeds:
        other = run("profile" if seed == "free" else "free")
        gaps = []
        for t, a, b in zip(rec.times, rec.fields or [None] * len(rec.times), other.fields or [None] * len(rec.times)):
            gaps.append(math.nan if a is None or a.grid != b.grid else norm(a - b))
        rec.meta["seed_gap"] = gaps
        rec.meta["seed_gap_final"] = norm(rec.final - other.final) if rec.final.grid == other.final.grid else math.nan
        rec.meta["other_seed_dist_to_profile"] = list(other.l2_dist_to_profile)
    return rec


# -- Picard map ----------------------------------------------------------------


@dataclass
class PicardResult:
    times: np.ndarray
    ratios: np.ndarray
    contraction_ratio: float
    tail_exponent: float
    refined: list
    record: TrajectoryRecord

    def rows(self):
        return list(zip(self.times.tolist(), self.ratios.tolist()))


def picard_refine(rec: TrajectoryRecord, spec: ProfileSpec, cfg: SolverConfig | None = None) -> PicardResult:
    """Apply the integral map once to a backward trajectory.

    In the interaction picture ``z = W(-t)u`` the map reads

        Phi[u](t) = F^-1 w(t) + i lam * integral_t^inf [W(-s)(|u|u)(s) - F^-1 h(s)] ds,

    with ``h`` from :func:`duhamel_source_data`.  The integral is a trapezoid
    in ``log s`` over the stored snapshots, plus a power-law tail beyond the
    last one.  The contraction ratio is
    ``||Phi[u] - u|| / ||u - W F^-1 w||`` in the l^2-in-time, L^2-in-space norm
    over the snapshot times below the seed time.
    """
    if spec.p != 2:
        raise ConfigurationError("the integral map is implemented for p = 2")
    if rec.profile_grid is None or len(rec.profile_times) < 3:
        raise ConfigurationError("picard_refine needs at least 3 stored snapshots (set profile_times)")
    pg = rec.profile_grid
    order = np.argsort(rec.profile_times)
    tau = np.asarray(rec.profile_times)[order]
    z = [rec.pullbacks[k] for k in order]
    nz = [rec.pulled_nonlinearity[k] for k in order]
    freew = [inverse_transform(modified_free_data(s, spec, pg)).values for s in tau]
    if spec.lam == 0:
        return PicardResult(tau, np.zeros(tau.size), 0.0, math.nan, [Field(pg, Domain.SPACE, w) for w in freew], rec)
    G = [nz[k] - inverse_transform(duhamel_source_data(s, spec, pg)).values for k, s in enumerate(tau)]
    # trapezoid in log s from each snapshot up to the last one
    s_log = np.log(tau)
    integ = [0.0 * G[-1]]
    for k in range(tau.size - 2, -1, -1):
        ds = s_log[k + 1] - s_log[k]
        integ.append(integ[-1] + 0.5 * ds * (G[k] * tau[k] + G[k + 1] * tau[k + 1]))
    integ = integ[::-1]
    # power-law tail beyond the last snapshot, fitted on the upper snapshots
    gn = np.array([math.sqrt(kernels.abs2_sum(g) * pg.cell) for g in G])
    m = max(3, tau.size // 4)
    gamma = math.nan
    tail = 0.0 * G[-1]
    if np.all(gn[-m:] > 0):
        slope = np.polyfit(np.log(tau[-m:]), np.log(gn[-m:]), 1)[0]
        gamma = -slope
        if gamma > 1:
            tail = G[-1] * tau[-1] / (gamma - 1.0)
    refined, num, den, ratios = [], 0.0, 0.0, []
    for k in range(tau.size):
        phi = freew[k] + 1j * spec.lam * (integ[k] + tail)
        refined.append(Field(pg, Domain.SPACE, phi))
        a = kernels.abs2_sum(phi - z[k]) * pg.cell
        b = kernels.abs2_sum(z[k] - freew[k]) * pg.cell
        ratios.append(math.sqrt(a / b) if b > 0 else math.inf)
        if k < tau.size - 1:
            num += a
            den += b
    ratio = math.sqrt(num / den) if den > 0 else (0.0 if num == 0 else math.inf)
    return PicardResult(tau, np.array(ratios), ratio, gamma, refined, rec)


def pairing_series(rec: TrajectoryRecord, psi: Field, s: float):
    """``<z(t) - z(s), psi>`` for every stored snapshot time ``t``, with ``z = W(-t)u``."""
    if rec.profile_grid is None:
        raise ValueError("trajectory has no stored snapshots")
    if psi.grid != rec.profile_grid:
        raise ValueError("pairing datum and snapshots live on different grids")
    psi = to_space(psi)
    zs = rec.pullback(s)
    out = []
    for t, z in sorted(zip(rec.profile_times, rec.pullbacks), key=lambda q: q[0]):
        out.append((t, inner(Field(psi.grid, Domain.SPACE, z - zs), psi)))
    return out
