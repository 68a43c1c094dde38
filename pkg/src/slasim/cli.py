"""Command-line entry point: ``slasim run|sweep|preset|presets|verify|trace``."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, ParseError, format_config, parse_config
from .experiment import run_experiment, run_preset, run_sweep, verify
from .model import InvalidParameter
from .presets import get_preset, list_presets
from .sim import format_trace, run_simulation

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


def _load(path: str, seed: int | None = None):
    cfg = parse_config(Path(path).read_text())
    if seed is not None:
        cfg = replace(cfg, seed=seed, notes=list(cfg.notes))
    for note in cfg.notes:
        print(f"note: {note}", file=sys.stderr)
    return cfg


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"cannot parse sweep values {text!r}") from None


def cmd_run(args) -> int:
    cfg = _load(args.config, args.seed)
    if args.replications is not None:
        cfg = replace(cfg, replications=args.replications, notes=list(cfg.notes))
    run_experiment(cfg, args.out, args.workers)
    print((Path(args.out) / "aggregate.csv").read_text(), end="")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load(args.config, args.seed)
    if args.replications is not None:
        cfg = replace(cfg, replications=args.replications, notes=list(cfg.notes))
    policies = args.policies.split(",") if args.policies else [cfg.policy.admission]
    path = run_sweep(cfg, args.param, _values(args.values), [p.strip() for p in policies if p.strip()],
                     args.out, args.workers)
    print(path)
    return EXIT_OK


def cmd_preset(args) -> int:
    try:
        preset = get_preset(args.name)
    except KeyError as exc:
        raise ConfigError(str(exc.args[0])) from None
    if args.print_config:
        print(format_config(preset.config()), end="")
        return EXIT_OK
    if args.out is None:
        raise ConfigError("preset needs --out DIR (or --print-config)")
    for path in run_preset(preset, args.out, args.replications, args.duration, args.long, args.seed, args.workers):
        print(path)
    return EXIT_OK


def cmd_presets(args) -> int:
    for name, p in list_presets().items():
        print(f"{name:8s} {p.description}")
    return EXIT_OK


def cmd_verify(args) -> int:
    problems = verify(args.dir)
    for p in problems:
        print(p, file=sys.stderr)
    if problems:
        return EXIT_RUNTIME
    print(f"{args.dir}: aggregates match per-run files")
    return EXIT_OK


def cmd_trace(args) -> int:
    cfg = _load(args.config)
    if args.duration is not None:
        cfg = replace(cfg, duration=args.duration, notes=list(cfg.notes))
    text = format_trace(run_simulation(cfg, args.seed, trace=True))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slasim", description="Session-based SLA admission control simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration (all its replications)")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one parameter, e.g. classes[4].delta")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="comma separated")
    p.add_argument("--policies", help="comma separated; defaults to the config's policy")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--replications", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("preset", help="run a built-in experiment and emit its plot data")
    p.add_argument("name")
    p.add_argument("--out")
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--duration", type=float)
    p.add_argument("--long", action="store_true", help="ten times the default duration")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--print-config", action="store_true", help="print the preset's config text and exit")
    p.set_defaults(func=cmd_preset)

    p = sub.add_parser("presets", help="list built-in presets")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("verify", help="recompute aggregates from per-run files")
    p.add_argument("dir")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("trace", help="dump the event trace of one run")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--duration", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ConfigError, InvalidParameter, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
