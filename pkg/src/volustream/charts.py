"""Static SVG line charts rebuilt from a metrics CSV."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# stable SVG output: fixed ids, no timestamp
plt.rcParams["svg.hashsalt"] = "volustream"


def _read(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    cols: dict = {}
    for r in rows:
        for k, v in r.items():
            cols.setdefault(k, []).append(float(v) if v not in ("", None) else math.nan)
    return cols


def _panel(path: Path, t, series: dict, ylabel: str, duration: float | None) -> Path:
    fig, ax = plt.subplots(figsize=(7, 3))
    for label, ys in series.items():
        ax.plot(t, ys, label=label, linewidth=1.0)
    ax.set_xlabel("user time (s)")
    ax.set_ylabel(ylabel)
    if duration:
        ax.set_xlim(0, duration)
    if len(series) > 1:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def emit_charts(metrics_csv, out_dir, duration: float | None = None) -> list[Path]:
    """Occupancy, bandwidth and per-object utility panels; empty panels are skipped."""
    cols = _read(metrics_csv)
    if not cols or not cols.get("t"):
        return []
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t = cols["t"]
    span = duration if duration is not None else max(t)
    written = []

    def has(name):
        return name in cols and any(not math.isnan(v) for v in cols[name])

    if has("occupancy_s"):
        written.append(_panel(out / "occupancy.svg", t, {"occupancy": cols["occupancy_s"]}, "occupancy (s)", span))
    bw = {}
    if has("selected_bandwidth_avg_bps"):
        bw["selected"] = [v / 1e6 for v in cols["selected_bandwidth_avg_bps"]]
    if has("est_throughput_bps"):
        bw["estimated throughput"] = [v / 1e6 for v in cols["est_throughput_bps"]]
    if bw:
        written.append(_panel(out / "bandwidth.svg", t, bw, "Mbps", span))
    per_obj = {k.replace("utility_", ""): v for k, v in cols.items() if k.startswith("utility_obj") and has(k)}
    if per_obj:
        written.append(_panel(out / "utility.svg", t, per_obj, "utility in window", span))
    return written
