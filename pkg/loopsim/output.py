"""Trace CSV and SVG plot emission."""
import csv
import io
from typing import Optional, Sequence

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .errors import ConfigError
from .simloop import SimTrace

CSV_HEADER = SimTrace.COLUMNS


def emit_csv(trace: SimTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in zip(*(getattr(trace, c) for c in CSV_HEADER)):
        writer.writerow([f"{v:.6f}" for v in row])
    return buf.getvalue()


def parse_csv(text: str, name: str = "") -> SimTrace:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("empty trace CSV", key="header")
    if tuple(header) != CSV_HEADER:
        raise ConfigError(f"unexpected CSV header {header!r}", key="header")
    rows = [[float(v) for v in row] for row in reader if row]
    cols = np.array(rows, dtype=float).reshape(-1, len(CSV_HEADER))
    t = cols[:, 0]
    ts = float(t[1] - t[0]) if len(t) > 1 else 0.0
    return SimTrace(
        ts=ts,
        t=t,
        setpoint=cols[:, 1],
        pv=cols[:, 2],
        pv_clean=cols[:, 3],
        u=cols[:, 4],
        disturbance=cols[:, 5],
        clamped=np.zeros(len(t), dtype=bool),
        name=name,
    )


def emit_plot(traces: Sequence[SimTrace], labels: Optional[Sequence[str]] = None, title: str = "") -> str:
    """Two-panel SVG (PV over setpoint, controller output), byte-stable."""
    if not traces:
        raise ConfigError("emit_plot needs at least one trace", key="traces")
    labels = list(labels or [tr.name or f"trace{i}" for i, tr in enumerate(traces)])
    if len(labels) != len(traces):
        raise ConfigError("one label per trace", key="labels")

    with rc_context({"svg.hashsalt": "loopsim", "svg.fonttype": "none", "path.simplify": False}):
        fig = Figure(figsize=(8, 6))
        FigureCanvasSVG(fig)
        ax_pv, ax_u = fig.subplots(2, 1, sharex=True)

        ax_pv.step(traces[0].t, traces[0].setpoint, where="post", color="0.4", linestyle="--", label="setpoint", gid="setpoint")
        for tr, label in zip(traces, labels):
            ax_pv.plot(tr.t, tr.pv_clean, label=f"PV {label}", gid=f"pv_{label}")
            ax_u.step(tr.t, tr.u, where="post", label=f"u {label}", gid=f"u_{label}")

        ax_pv.set_ylabel("PV [% of span]")
        ax_u.set_ylabel("u [%]")
        ax_u.set_xlabel("time [s]")
        ax_pv.legend(loc="lower right")
        ax_u.legend(loc="upper right")
        ax_pv.grid(True, alpha=0.3)
        ax_u.grid(True, alpha=0.3)
        if title:
            ax_pv.set_title(title)

        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()
