"""Scheme/velocity sweeps and their CSV output."""
from __future__ import annotations

import csv
import io
import logging
from pathlib import Path

import numpy as np

from .config import RunSpec, SystemConfig
from .frames import ScheduleError, build_schedule
from .simulate import SchemeResult, geometry_rng, simulate_scheme

log = logging.getLogger(__name__)

SYMBOL_FIELDS = ("scheme", "velocity_kmh", "user", "symbol_index", "subcarrier_class",
                 "metric", "value", "trials", "seed")
AVERAGE_FIELDS = ("scheme", "velocity_kmh", "frame_length", "metric", "value", "trials",
                  "seed", "discarded")


def _fmt(x: float) -> str:
    return f"{x:.10e}"


def run_sweep(system: SystemConfig, run: RunSpec, write: bool = True) -> list:
    """Simulate every scheme at every velocity.

    One user drop, drawn from the master seed, is shared by all schemes and
    velocities.  When ``write`` is set, ``per_symbol.csv`` and
    ``frame_average.csv`` are written to ``run.out_dir`` (and plots when
    ``run.emit_plots``).
    """
    for scheme in run.schemes:
        try:
            build_schedule(scheme, system.frame_length, system.n_pilots, system.n_ul_data,
                           system.kappa)
        except ScheduleError as exc:
            raise ScheduleError(f"{scheme}: {exc}") from exc
    betas = system.draw_betas(geometry_rng(run.seed))
    results = []
    for scheme in run.schemes:
        for v in run.velocities:
            log.info("simulating %s at %g km/h (%d trials)", scheme, v, run.trials)
            results.append(simulate_scheme(system, scheme, v, run.trials, run.seed, betas,
                                           chunk=run.chunk, workers=run.workers))
    if write:
        out = Path(run.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "per_symbol.csv").write_text(per_symbol_csv(results))
        (out / "frame_average.csv").write_text(frame_average_csv(results))
        if run.emit_plots:
            from .plots import emit_plots
            emit_plots(results, out)
    return results


def per_symbol_rows(result: SchemeResult):
    """Rows of the per-symbol table; user ``sum``/``mean`` rows aggregate users."""
    base = (result.scheme, f"{result.velocity_kmh:g}")
    tail = (str(result.trials), str(result.seed))
    M = result.n_subcarriers
    for i, r in sorted(result.symbols.items()):
        for cls, n_sub, mc, closed in (("DL", r.n_dl, r.dl_mc, r.dl_closed),
                                       ("UL", r.n_ul, r.ul_mc, r.ul_closed)):
            if mc is None:
                continue
            for metric, vals in (("rate_mc_lb", mc), ("rate_closed", closed)):
                for d, val in enumerate(vals, start=1):
                    yield (*base, str(d), str(i), cls, metric, _fmt(val), *tail)
                yield (*base, "sum", str(i), cls, metric, _fmt(n_sub * float(np.sum(vals)) / M),
                       *tail)
        if r.nmse is not None:
            for d, val in enumerate(r.nmse, start=1):
                yield (*base, str(d), str(i), "all", "nmse", _fmt(val), *tail)
            yield (*base, "mean", str(i), "all", "nmse", _fmt(float(np.mean(r.nmse))), *tail)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def per_symbol_csv(results) -> str:
    return _csv(SYMBOL_FIELDS, (row for r in results for row in per_symbol_rows(r)))


def frame_average_csv(results) -> str:
    rows = []
    for r in results:
        for metric, kind in (("rate_mc_lb", "mc"), ("rate_closed", "closed")):
            rows.append((r.scheme, f"{r.velocity_kmh:g}", str(r.frame_length), metric,
                         _fmt(r.frame_average(kind)), str(r.trials), str(r.seed),
                         str(r.discarded)))
    return _csv(AVERAGE_FIELDS, rows)
