"""Power-law fits, the critical-power (Glassey) diagnostic and small-data sweeps."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .amplitudes import GaussianAmplitude
from .grid import GridSpec, inverse_transform
from .integrator import (
    FinalStateDivergence,
    SolverConfig,
    TrajectoryRecord,
    pairing_series,
    picard_refine,
    solve_final_state,
)
from .profile import ProfileSpec
from .propagator import OracleFailure, QuadSpec

__all__ = [
    "FitError",
    "PowerLawFit",
    "fit_power_law",
    "GlasseyReport",
    "glassey_diagnostic",
    "critical_predicate",
    "glassey_pairing_series",
    "pairing_slope",
    "epsilon_sweep",
]


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class PowerLawFit:
    """``value ~ c * t^(-alpha)`` from least squares in log-log coordinates."""

    c: float
    alpha: float
    r_squared: float
    n_points: int
    t_min: float
    t_max: float
    residual_std: float = 0.0

    def __call__(self, t):
        return self.c * np.asarray(t, dtype=float) ** (-self.alpha)


def fit_power_law(times, values) -> PowerLawFit:
    """Least-squares fit of ``log value = log c - alpha log t``.

    Parameters
    ----------
    times : sequence of float
        Strictly increasing positive times (at least 4).
    values : sequence of float
        Strictly positive samples.

    Returns
    -------
    PowerLawFit

    Raises
    ------
    FitError
        On fewer than 4 points, non-increasing times, or a nonpositive value
        (the message names the offending index).
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise FitError("times and values must be 1D arrays of equal length")
    if t.size < 4:
        raise FitError(f"need at least 4 points, got {t.size}")
    for i, (ti, vi) in enumerate(zip(t, v)):
        if not ti > 0:
            raise FitError(f"time at index {i} is not positive ({ti!r})")
        if not vi > 0 or not math.isfinite(vi):
            raise FitError(f"value at index {i} is not strictly positive ({vi!r})")
    if np.any(np.diff(t) <= 0):
        raise FitError("times must be strictly increasing")
    x = np.log(t)
    y = np.log(v)
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    icpt = ym - slope * xm
    res = y - (icpt + slope * x)
    ss_tot = np.sum((y - ym) ** 2)
    ss_res = np.sum(res**2)
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, ym * ym) * t.size else max(0.0, 1.0 - ss_res / ss_tot)
    return PowerLawFit(
        c=float(math.exp(icpt)),
        alpha=float(-slope),
        r_squared=float(r2),
        n_points=int(t.size),
        t_min=float(t[0]),
        t_max=float(t[-1]),
        residual_std=float(math.sqrt(ss_res / max(1, t.size - 2))),
    )


# -- critical-power diagnostic ---------------------------------------------------

_EXP_TOL = 1e-12


def critical_predicate(p: float, d: int) -> bool:
    """``p <= 1 + 2/d``: the free-scattering obstruction applies."""
    return d * (p - 1.0) / 2.0 <= 1.0 + _EXP_TOL


def _time_factor(e: float, s: float, t: float) -> float:
    if abs(e - 1.0) <= _EXP_TOL:
        return math.log(t / s)
    return (t ** (1.0 - e) - s ** (1.0 - e)) / (1.0 - e)


@dataclass(frozen=True)
class GlasseyReport:
    """Size of the leading pairing term between times ``s`` and ``t``.

    ``i1 = |lam| * amplitude_integral * integral_s^t tau^(-time_exponent) d tau``.
    """

    amplitude_integral: float
    time_exponent: float
    diverges: bool
    lam: float
    p: float
    d: int
    s_time: float
    t_time: float
    method: str

    def time_factor(self, s: float, t: float) -> float:
        return _time_factor(self.time_exponent, s, t)

    def i1_magnitude(self, s: float | None = None, t: float | None = None) -> float:
        s = self.s_time if s is None else s
        t = self.t_time if t is None else t
        return abs(self.lam) * self.amplitude_integral * self.time_factor(s, t)

    @property
    def log_slope(self) -> float:
        """Slope of ``i1`` against ``log(t/s)`` at the critical exponent."""
        return abs(self.lam) * self.amplitude_integral


def _gauss_weighted_1d(c: float, q: float) -> float:
    """``integral exp(-c mu^2) (1 + 3 mu^2)^(-q) d mu`` (even integrand, adaptive quadrature)."""
    if q == 0:
        return math.sqrt(math.pi / c)
    val, _ = integrate.quad(lambda m: math.exp(-c * m * m) * (1.0 + 3.0 * m * m) ** -q, 0.0, np.inf,
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return 2.0 * val


def _amplitude_integral(amp, p: float, d: int, quad: QuadSpec) -> tuple[float, str]:
    q = 0.5 * (p - 1.0)
    if isinstance(amp, GaussianAmplitude):
        if amp.a == 0:
            return 0.0, "closed-form"
        if amp.c1 == 0 and amp.c2 == 0:
            sig = [amp.s1] + [amp.s2] * (d - 1)
            val = abs(amp.a) ** (p + 1) * _gauss_weighted_1d((p + 1) / (2 * sig[0] ** 2), q)
            for s in sig[1:]:
                val *= math.sqrt(2 * math.pi * s * s / (p + 1))
            return float(val), "closed-form"
    if getattr(amp, "d", d) != d:
        raise ValueError(f"amplitude is {amp.d}-dimensional but d={d} was requested")
    r = quad.radius if quad.radius > 0 else 12.0

    def f(*mu):
        a = abs(complex(amp(*[np.asarray(m) for m in mu])))
        return a ** (p + 1) * (1.0 + 3.0 * mu[0] ** 2) ** (-q)

    tol = max(quad.tol, 1e-12)
    val, err = integrate.nquad(f, [(-r, r)] * d, opts={"epsabs": 0.0, "epsrel": tol, "limit": 200})
    if not math.isfinite(val) or err > 100 * tol * max(abs(val), 1e-300):
        raise OracleFailure(f"amplitude quadrature did not converge (value {val:.3e}, error {err:.3e})")
    return float(val), "quadrature"


def glassey_diagnostic(spec: ProfileSpec, s_time: float, t_time: float, quad: QuadSpec | None = None,
                       d: int | None = None) -> GlasseyReport:
    """Analytic leading pairing term for data ``spec`` between ``s`` and ``t``.

    Parameters
    ----------
    spec : ProfileSpec
        Scattering data, coupling and power.
    s_time, t_time : float
        ``0 < s < t``.
    quad : QuadSpec, optional
        Truncation radius and tolerance for non-Gaussian data.
    d : int, optional
        Dimension of the formula (defaults to ``spec.d``).  A centred
        Gaussian is extended to ``d > 2`` with its second width on every
        transverse axis.

    Returns
    -------
    GlasseyReport
    """
    if not 0 < s_time < t_time:
        raise ValueError("need 0 < s < t")
    if not spec.p > 1:
        raise ValueError("the diagnostic needs p > 1")
    d = spec.d if d is None else d
    quad = quad or QuadSpec(tol=1e-10)
    A, method = _amplitude_integral(spec.amplitude, spec.p, d, quad)
    e = d * (spec.p - 1.0) / 2.0
    return GlasseyReport(A, e, critical_predicate(spec.p, d), spec.lam, spec.p, d, s_time, t_time, method)


def glassey_pairing_series(traj: TrajectoryRecord, spec: ProfileSpec, s: float):
    """``<W(-t)u(t) - W(-s)u(s), psi_plus>`` at every stored snapshot time."""
    if traj.profile_grid is None:
        raise ValueError("trajectory has no stored snapshots (set profile_times)")
    psi = inverse_transform(spec.amplitude.sample(traj.profile_grid))
    return pairing_series(traj, psi, s)


def pairing_slope(series, s: float, t_min: float, t_max: float) -> float:
    """Least-squares slope of ``|P(t)|`` against ``log(t/s)`` on a window."""
    pts = [(math.log(t / s), abs(v)) for t, v in series if t_min - 1e-9 <= t <= t_max + 1e-9]
    if len(pts) < 2:
        raise FitError("need at least two pairing samples in the window")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


# -- small-data sweep ------------------------------------------------------------


def epsilon_sweep(sigma: float, norms, lams, grid: GridSpec, T: float, t_end: float, cfg: SolverConfig,
                  contraction_max: float = 1.0):
    """Backward solves over a grid of data sizes and couplings.

    Returns rows ``(h02_norm, lam, converged, contraction_ratio, note)``; a
    point counts as converged when the solve finishes and the integral map
    contracts.
    """
    rows = []
    for eps in norms:
        for lam in lams:
            spec = ProfileSpec(GaussianAmplitude.with_h02_norm(eps, sigma), lam)
            try:
                rec = solve_final_state(spec, T, t_end, cfg, grid)
                ratio = picard_refine(rec, spec).contraction_ratio if cfg.profile_times else math.nan
                ok = not (ratio >= contraction_max)
                rows.append((eps, lam, ok, ratio, ""))
            except FinalStateDivergence as exc:
                rows.append((eps, lam, False, math.nan, str(exc)))
    return rows
