"""Command-line entry point: ``anisonls <command> [--config FILE] [--out DIR] ...``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import SCHEMA, ConfigError, Config, load_config, parse_config
from .grid import set_fft_workers

COMMANDS = {
    "simulate": "simulate",
    "scatter-fit": "scattering-fit",
    "remainder-fit": "remainder-fit",
    "glassey": "glassey",
    "kernel-validate": "kernel-validate",
    "convergence": "convergence-ladder",
    "linear-decay": "linear-decay",
    "residual-fit": "residual-source-fit",
    "epsilon-sweep": "epsilon-sweep",
}


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="flat 'section.key = value' config file")
    p.add_argument("--out", default=d, help="report directory (overrides output.dir)")
    p.add_argument("--threads", type=int, default=d, help="FFT worker threads")
    p.add_argument("--seed", type=int, default=d, help="RNG seed (overrides experiment.seed)")
    p.add_argument("--set", action="append", default=argparse.SUPPRESS if suppress else [], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="anisonls", description="Anisotropic fourth-order NLS scattering lab")
    _global_flags(ap, suppress=False)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, kind in COMMANDS.items():
        sp = sub.add_parser(name, help=f"run the {kind} experiment")
        _global_flags(sp, suppress=True)
    sp = sub.add_parser("run", help="run whatever experiment.kind the config names")
    _global_flags(sp, suppress=True)
    return ap


def _load(args) -> Config:
    kind = COMMANDS.get(args.command)
    if args.config:
        cfg = load_config(args.config, require_kind=False)
    else:
        cfg = parse_config("", require_kind=False)
    if kind is not None:
        have = cfg["experiment.kind"]
        if have is not None and have != kind:
            raise ConfigError(f"config names experiment {have!r} but the command runs {kind!r}")
        cfg = cfg.with_overrides(experiment__kind=kind)
    elif cfg["experiment.kind"] is None:
        raise ConfigError("missing required key 'experiment.kind'")
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        if k not in SCHEMA:
            raise ConfigError(f"unknown key {k!r}")
        try:
            cfg = cfg.with_overrides(**{k.replace(".", "__"): SCHEMA[k][0](v)})
        except ValueError as exc:
            raise ConfigError(f"bad value for {k}: {exc}") from None
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    from .experiments import run_experiment

    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"anisonls: config error: {exc}", file=sys.stderr)
        return 2
    if args.threads:
        set_fft_workers(args.threads)
    try:
        res = run_experiment(cfg, out_dir=args.out, seed=args.seed)
    except ConfigError as exc:
        print(f"anisonls: config error: {exc}", file=sys.stderr)
        return 2
    for name, ok, detail in res.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    print(f"status = {res.status} ({res.out_dir})")
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
