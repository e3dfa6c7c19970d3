"""Command-line front end: ``run``, ``validate``, ``calibrate``, ``version``.

Exit codes: 0 success, 1 validation error, 2 runtime error, 3 a scenario
check failed.
"""
from __future__ import annotations

import argparse
import json
import os
import platform
import sys
import traceback
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__, export
from .config import ConfigError, load_config, parse_config
from .fitting import CACHE_ENV, build_calibration
from .scenarios import SCENARIO_RUNNERS, build_setup, physics_report

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_ASSERTION = 0, 1, 2, 3


def _manifest(cfg, threads: int, status: str) -> dict:
    return {"artifact": "quasicondensate", "version": __version__, "status": status,
            "seed": cfg.seed, "threads": threads, "config": cfg.resolved(), "input": cfg.raw,
            "environment": {"python": platform.python_version(), "numpy": np.__version__,
                            "scipy": scipy.__version__}}


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.output:
            cfg.output = args.output
        physics_report(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    threads = args.threads
    export.write_json(_manifest(cfg, threads, "incomplete"), out / "manifest.json")
    try:
        summary = SCENARIO_RUNNERS[cfg.scenario](cfg, out, threads)
    except ConfigError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - report and keep the bundle marked incomplete
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.verbose:
            traceback.print_exc()
        return EXIT_RUNTIME
    checks = summary.get("checks", [])
    passed = all(c["passed"] for c in checks)
    export.write_json({"scenario": cfg.scenario, "passed": passed, **summary}, out / "summary.json")
    export.write_json(_manifest(cfg, threads, "complete"), out / "manifest.json")
    for c in checks:
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}: {c['value']} (threshold {c['threshold']})")
    print(f"results written to {out}")
    return EXIT_OK if passed else EXIT_ASSERTION


def cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
        report = physics_report(cfg)
        if cfg.scenario != "sinegordon":
            build_setup(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    for w in report["warnings"]:
        print(f"warning: {w}")
    s = report["scales"]
    print(f"ok: scenario {cfg.scenario}, seed {cfg.seed}")
    print(f"  g1d = {s['g1d']:.6g} J m, c = {s['sound_speed']:.6g} m/s, gamma = {s['gamma']:.3g}, "
          f"T_eff = {s['T_eff']:.6g} K")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = parse_config(_default_calibration_config())
        st = build_setup(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    cache = args.cache_dir or os.environ.get(CACHE_ENV)
    if not cache:
        print(f"error: set {CACHE_ENV} or pass --cache-dir", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        T = st.scales.T_eff
        table = build_calibration(st.basis, T * args.t_min_factor, T * args.t_max_factor,
                                  R=args.realizations, seed=cfg.seed + 1, cache_dir=cache)
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"calibration {table.key} cached in {cache}")
    for T, lam in zip(table.temperatures, table.lengths):
        print(f"  T = {T:.6g} K  decay length = {lam:.6g} m")
    return EXIT_OK


def _default_calibration_config() -> dict:
    return {"scenario": "prethermalization", "seed": 1,
            "gas": {"species": "Rb87", "n1d_per_um": 60, "omega_perp_2pi_Hz": 3000,
                    "geometry": {"type": "box", "length_um": 100}},
            "basis": {"grid_points": 256}, "ensemble": {"R": 1000}, "output": "."}


def cmd_version(args) -> int:
    print(f"quasicondensate {__version__}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasicondensate",
                                description="Phonon-ensemble simulations of 1D quasicondensates.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a JSON config")
    r.add_argument("config")
    r.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    r.add_argument("--output", help="override the output directory of the config")
    r.add_argument("-v", "--verbose", action="store_true")
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    c = sub.add_parser("calibrate", help="build and cache the thermal decay-length table")
    c.add_argument("config", nargs="?")
    c.add_argument("--cache-dir")
    c.add_argument("--t-min-factor", type=float, default=0.25)
    c.add_argument("--t-max-factor", type=float, default=4.0)
    c.add_argument("--realizations", type=int, default=1000)
    c.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    c.set_defaults(func=cmd_calibrate)
    ver = sub.add_parser("version", help="print the version")
    ver.set_defaults(func=cmd_version)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
