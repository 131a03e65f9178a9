"""Command-line entry point."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from .config import ConfigError, load_config
from .frames import ScheduleError
from .sweep import run_sweep


def parse_velocities(text: str) -> tuple:
    """``"20,40,60"`` or an inclusive range ``"20:300:20"``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0:
                raise ValueError
            start, stop, step = parts
            vals = np.arange(start, stop + step / 2, step)
        else:
            vals = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(f"velocities: cannot parse {text!r}") from None
    return tuple(int(v) if float(v).is_integer() else float(v) for v in vals)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mddsim",
                                description="Link-level comparison of MDD, TDD and IBFD "
                                            "massive-MIMO OFDM over aging channels.")
    p.add_argument("--config", help="YAML file with 'system' and 'run' sections")
    p.add_argument("--scheme", help="comma-separated schemes, e.g. 'MDD-1(7),TDD-1'")
    p.add_argument("--velocities", help="km/h list '20,100' or range '20:300:20'")
    p.add_argument("--trials", type=int, help="frames simulated per scheme and velocity")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--frame-length", type=int, help="symbols per frame")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--emit-plots", action="store_true", help="also write PNG figures")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        system, run = load_config(args.config)
        changes = {}
        if args.scheme:
            changes["schemes"] = tuple(s.strip() for s in args.scheme.split(",") if s.strip())
        if args.velocities:
            changes["velocities"] = parse_velocities(args.velocities)
        for name, field in (("trials", "trials"), ("seed", "seed"), ("out", "out_dir"),
                            ("workers", "workers")):
            if getattr(args, name) is not None:
                changes[field] = getattr(args, name)
        if args.emit_plots:
            changes["emit_plots"] = True
        run = dataclasses.replace(run, **changes).validate()
        if args.frame_length is not None:
            system = dataclasses.replace(system, frame_length=args.frame_length).validate()
        results = run_sweep(system, run)
    except (ConfigError, ScheduleError) as exc:
        print(f"mddsim: error: {exc}", file=sys.stderr)
        return 2
    for r in results:
        print(f"{r.scheme:<10} {r.velocity_kmh:>6g} km/h  T={r.frame_length}  "
              f"MC {r.frame_average('mc'):.4f}  closed {r.frame_average('closed'):.4f} bit/s/Hz")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
