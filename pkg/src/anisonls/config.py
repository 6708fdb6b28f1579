"""Flat ``section.key = value`` configuration files.

One assignment per line, ``#`` starts a comment, blank lines are ignored.
Floats are written with ``repr`` (shortest round-trip decimal) so a dumped
config reloads bit-exactly.  Lists are comma separated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["ConfigError", "SCHEMA", "EXPERIMENT_KINDS", "Config", "parse_config", "load_config", "dump_config"]

EXPERIMENT_KINDS = (
    "linear-decay",
    "remainder-fit",
    "residual-source-fit",
    "scattering-fit",
    "glassey",
    "convergence-ladder",
    "kernel-validate",
    "simulate",
    "epsilon-sweep",
)


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("true", "yes", "on", "1"):
        return True
    if v in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _float(s: str) -> float:
    return float(s.strip())


def _int(s: str) -> int:
    return int(s.strip())


def _floats(s: str) -> tuple:
    s = s.strip()
    return tuple(float(v) for v in s.split(",")) if s else ()


def _kind(s: str) -> str:
    s = s.strip()
    if s not in EXPERIMENT_KINDS:
        raise ValueError(f"unknown experiment {s!r} (expected one of {', '.join(EXPERIMENT_KINDS)})")
    return s


def _seed(s: str) -> str:
    s = s.strip()
    if s not in ("free", "profile"):
        raise ValueError(f"seed must be 'free' or 'profile', got {s!r}")
    return s


# key -> (parser, default, description)
SCHEMA = {
    "experiment.kind": (_kind, None, "which experiment to run"),
    "experiment.seed": (_int, 0, "RNG seed for sampled points and synthetic noise"),
    "output.dir": (str.strip, "out", "report directory"),
    "grid.n1": (_int, 0, "points along x1 (0: planned from the data)"),
    "grid.n2": (_int, 0, "points along x2 (0: planned)"),
    "grid.l1": (_float, 0.0, "half-extent along x1 (0: planned)"),
    "grid.l2": (_float, 0.0, "half-extent along x2 (0: planned)"),
    "grid.max_points": (_int, 1 << 24, "largest planned grid accepted (points)"),
    "grid.tail": (_float, 1e-10, "mass fraction allowed outside the planned box"),
    "grid.freq_eps": (_float, 1e-8, "relative amplitude resolved by the planned spacing"),
    "profile.sigma": (_float, 0.5, "Gaussian width of the final-state amplitude"),
    "profile.sigma2": (_float, 0.0, "width along xi2 (0: same as sigma)"),
    "profile.h02_norm": (_float, 0.05, "weighted norm ||psi_plus||_{H^{0,2}} of the datum"),
    "profile.amplitude": (_float, 0.0, "peak amplitude (overrides h02_norm when nonzero)"),
    "profile.zero": (_bool, False, "use the zero datum"),
    "profile.lam": (_float, 0.5, "coupling"),
    "profile.p": (_float, 2.0, "nonlinearity power"),
    "profile.epsilon": (_float, 0.1, "small-data bound the datum must respect"),
    "solver.dt": (_float, 2.0, "base time step"),
    "solver.T": (_float, 400.0, "seed time of the backward solve"),
    "solver.T_check": (_float, 800.0, "second seed time for the stability check (0: skip)"),
    "solver.t_end": (_float, 3.0, "end time of the backward solve"),
    "solver.dealias": (_bool, False, "2/3-rule mask on the nonlinear substep"),
    "solver.tol_mass_drift": (_float, 1e-10, "allowed relative mass drift"),
    "solver.crop_tol": (_float, 1e-11, "crop the box when the outer half holds less mass"),
    "solver.seed": (_seed, "free", "asymptotic seed: free or profile"),
    "solver.compare_seeds": (_bool, False, "also run from the other seed"),
    "solver.snapshots": (_int, 48, "stored pulled-back snapshots for the integral map"),
    "quad.radius": (_float, 0.0, "oracle truncation radius (0: automatic)"),
    "quad.initial_nodes": (_int, 1024, "oracle nodes on the first rung"),
    "quad.max_doublings": (_int, 12, "oracle refinement rungs"),
    "quad.tol": (_float, 1e-9, "oracle certification tolerance"),
    "fit.t_min": (_float, 20.0, "start of the fit window"),
    "fit.t_max": (_float, 200.0, "end of the fit window"),
    "fit.n_times": (_int, 8, "log-spaced times in the fit window"),
    "linear.times": (_floats, (10.0, 20.0, 40.0, 80.0, 160.0, 320.0), "times of the decay series"),
    "linear.p": (_floats, (2.0, math.inf), "Lebesgue exponents of the decay series"),
    "linear.sigma": (_float, 0.25, "Gaussian width of the decay datum"),
    "linear.amplitude": (_float, 1.0, "peak of the decay datum"),
    "growth.times": (_floats, (3.0, 10.0, 100.0, 1000.0), "times of the H^2 growth check"),
    "glassey.s": (_float, 10.0, "reference time s of the pairing"),
    "glassey.t0": (_float, 1.0, "start time of the forward solve"),
    "glassey.t_min": (_float, 20.0, "start of the pairing window"),
    "glassey.t_max": (_float, 160.0, "end of the pairing window"),
    "glassey.n_times": (_int, 8, "log-spaced pairing times"),
    "glassey.dt": (_float, 1.0, "time step of the forward solve"),
    "glassey.powers": (_floats, tuple(round(1.1 + 0.1 * k, 1) for k in range(20)), "powers of the divergence sweep"),
    "glassey.dims": (_floats, (1.0, 2.0, 3.0), "dimensions of the divergence sweep"),
    "convergence.dts": (_floats, (0.1, 0.05, 0.025, 0.0125), "time-step ladder"),
    "convergence.t_end": (_float, 10.0, "window length of the ladder"),
    "convergence.n": (_int, 512, "grid points per axis"),
    "convergence.l": (_float, 80.0, "box half-extent"),
    "convergence.width": (_float, 2.0, "width of the Gaussian initial datum"),
    "convergence.amplitude": (_float, 1.0, "peak of the Gaussian initial datum"),
    "convergence.mass_steps": (_int, 10000, "steps of the mass-drift run"),
    "kernel.points": (_int, 16, "random sample points per time"),
    "kernel.times": (_floats, (1.0, 10.0, 50.0), "oracle comparison times"),
    "kernel.n": (_int, 512, "grid points per axis"),
    "kernel.l": (_float, 40.0, "box half-extent"),
    "kernel.sigma": (_float, 1.0, "Gaussian width"),
    "simulate.t_start": (_float, 1.0, "start time"),
    "simulate.t_end": (_float, 20.0, "end time"),
    "simulate.record_stride": (_int, 1, "record every k steps"),
    "simulate.snapshot": (_bool, True, "write the final field as a binary snapshot"),
    "sweep.enabled": (_bool, True, "append the data-size sweep to scattering-fit"),
    "sweep.norms": (_floats, (0.05, 0.5, 5.0, 50.0), "data sizes of the sweep"),
    "sweep.lams": (_floats, (0.5, 2.0), "couplings of the sweep"),
    "sweep.T": (_float, 60.0, "seed time of sweep solves"),
    "threshold.remainder_min": (_float, 0.60, "lower bound of the remainder exponent"),
    "threshold.remainder_max": (_float, 0.90, "upper bound of the remainder exponent"),
    "threshold.alpha_min": (_float, 0.5, "lower bound of the scattering exponent"),
    "threshold.alpha_max": (_float, 0.9, "upper bound of the scattering exponent"),
    "threshold.r2_min": (_float, 0.98, "minimum fit quality"),
    "threshold.alpha_shift": (_float, 0.05, "max exponent change when T doubles"),
    "threshold.residual_slope": (_float, -1.5, "max log-log slope of the residual source"),
    "threshold.growth_ratio": (_float, 10.0, "max/min bound of the H^2 growth ratios"),
    "threshold.decay_ratio": (_float, 2.0, "max/min bound of the compensated decay"),
    "threshold.pairing_tol": (_float, 0.3, "relative tolerance of the pairing slope"),
    "threshold.bounded_ratio": (_float, 2.0, "bound on the noncritical pairing growth"),
    "threshold.contraction": (_float, 1.0, "bound on the integral-map contraction ratio"),
    "threshold.oracle_rel": (_float, 1e-6, "grid vs oracle relative agreement"),
    "threshold.richardson_lo": (_float, 3.5, "lowest allowed Richardson ratio"),
    "threshold.richardson_hi": (_float, 4.5, "highest allowed Richardson ratio"),
}


@dataclass
class Config:
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def section(self, name: str) -> dict:
        pre = name + "."
        return {k[len(pre):]: v for k, v in self.values.items() if k.startswith(pre)}

    def with_overrides(self, **kv) -> "Config":
        vals = dict(self.values)
        for k, v in kv.items():
            k = k.replace("__", ".")
            if k not in SCHEMA:
                raise ConfigError(f"unknown key {k!r}")
            vals[k] = v
        return Config(vals)


def defaults() -> dict:
    return {k: v[1] for k, v in SCHEMA.items()}


def parse_config(text: str, require_kind: bool = True) -> Config:
    """Parse config text, validating every key and value against ``SCHEMA``."""
    vals = defaults()
    seen = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", no)
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", no)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", no)
        seen[key] = no
        try:
            vals[key] = SCHEMA[key][0](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", no) from None
    if require_kind and vals["experiment.kind"] is None:
        raise ConfigError("missing required key 'experiment.kind'")
    return Config(vals)


def load_config(path, require_kind: bool = True) -> Config:
    with open(path) as fh:
        return parse_config(fh.read(), require_kind=require_kind)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_fmt(float(x)) for x in v)
    return str(v)


def dump_config(cfg: Config) -> str:
    """Serialise every key in schema order; round-trips through :func:`parse_config`."""
    lines = []
    for k in SCHEMA:
        v = cfg.values.get(k)
        if v is None:
            continue
        lines.append(f"{k} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
