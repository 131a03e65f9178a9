"""Static figures: rate and NMSE per symbol, average rate per velocity."""
from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

log = logging.getLogger(__name__)


def _per_symbol(ax, results, what: str) -> int:
    n = 0
    for r in results:
        s = r.series(what)
        if not s:
            continue
        ax.plot(list(s), list(s.values()), marker=".", label=f"{r.scheme}, {r.velocity_kmh:g} km/h")
        n += 1
    return n


def emit_plots(results, out_dir) -> list:
    """Write the three figure families to ``out_dir``; return the written paths.

    A figure with no data is skipped and logged.
    """
    if not results:
        raise ValueError("nothing to plot")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    for what, ylabel, name, logy in (("rate_mc", "sum rate [bit/s/Hz]", "rate_vs_symbol", False),
                                     ("nmse", "NMSE", "nmse_vs_symbol", True)):
        fig, ax = plt.subplots(figsize=(7, 4.5))
        if _per_symbol(ax, results, what):
            ax.set_xlabel("symbol index")
            ax.set_ylabel(ylabel)
            if logy:
                ax.set_yscale("log")
            ax.grid(True, alpha=0.3)
            ax.legend(fontsize=7)
            path = out / f"{name}.png"
            fig.savefig(path, dpi=120, bbox_inches="tight")
            written.append(path)
        else:
            log.info("no %s data, %s skipped", what, name)
        plt.close(fig)

    curves = {}
    for r in results:
        curves.setdefault((r.scheme, r.frame_length), []).append((r.velocity_kmh,
                                                                  r.frame_average("mc")))
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (scheme, T), pts in sorted(curves.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"{scheme}, T={T}")
    ax.set_xlabel("relative velocity [km/h]")
    ax.set_ylabel("average sum rate [bit/s/Hz]")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    path = out / "avg_rate_vs_velocity.png"
    fig.savefig(path, dpi=120, bbox_inches="tight")
    written.append(path)
    plt.close(fig)
    return written
