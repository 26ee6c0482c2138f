"""Trajectory frames and their on-disk formats.

A frame is a time-stamped bag of labeled segments.  The CSV format is one
edge per row, ``t,ax,ay,bx,by,left,right``, floats printed as their shortest
round-trip decimal so that emit -> parse -> emit is byte-identical.  The SVG
export draws each edge as a polyline colored by its region pair and marks
every junction with its classification kind.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analyze import AnalysisError, classify_junction
from .network import Network

FRAME_HEADER = "t,ax,ay,bx,by,left,right"
METRIC_COLUMNS = (
    "t",
    "mass",
    "deficit",
    "energy",
    "max_residual",
    "junctions_deg3",
    "junctions_deg4plus",
    "flagged",
)


@dataclass(frozen=True, eq=True)
class Frame:
    t: float
    segs: tuple  # (ax, ay, bx, by, left, right) per edge
    census: dict | None = field(default=None, compare=False)
    metrics: dict | None = field(default=None, compare=False)


def frame_of(t, net, metrics=None):
    segs = []
    for _, (u, v, L, R) in net.live_edges():
        a, b = net.vertices[u], net.vertices[v]
        segs.append((float(a[0]), float(a[1]), float(b[0]), float(b[1]), L, R))
    return Frame(float(t), tuple(segs), net.junction_census(), metrics)


def _frame_network(frame):
    """Glue segment endpoints back into a graph by exact coordinate identity."""
    ids = {}
    verts = []
    edges = []
    for ax, ay, bx, by, L, R in frame.segs:
        es = []
        for p in ((ax, ay), (bx, by)):
            if p not in ids:
                ids[p] = len(verts)
                verts.append(p)
            es.append(ids[p])
        edges.append((es[0], es[1], L, R))
    regions = max((max(e[2], e[3]) for e in edges), default=1)
    return Network(verts, edges, regions)


def parse_frame(text):
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != FRAME_HEADER:
        raise ValueError(f"frame csv must start with header {FRAME_HEADER!r}")
    if len(lines) == 1:
        raise ValueError("frame has no edges")
    t = None
    segs = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 7:
            raise ValueError(f"bad frame row {ln!r}")
        row_t = float(parts[0])
        t = row_t if t is None else t
        if row_t != t:
            raise ValueError(f"frame rows disagree on t ({row_t} vs {t})")
        segs.append((*map(float, parts[1:5]), int(parts[5]), int(parts[6])))
    frame = Frame(t, tuple(segs))
    return Frame(t, frame.segs, _frame_network(frame).junction_census())


def _write(sink, text):
    data = text.encode("utf-8")
    if hasattr(sink, "write"):
        try:
            sink.write(text)
        except TypeError:
            sink.write(data)
    else:
        with open(sink, "w", newline="") as f:
            f.write(text)
    return len(data)


def _frame_csv(frame):
    rows = [FRAME_HEADER]
    tr = repr(frame.t)
    for ax, ay, bx, by, L, R in frame.segs:
        rows.append(f"{tr},{ax!r},{ay!r},{bx!r},{by!r},{L},{R}")
    return "\n".join(rows) + "\n"


_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
)


def _frame_svg(frame):
    P = np.array([(s[0], s[1]) for s in frame.segs] + [(s[2], s[3]) for s in frame.segs])
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    m = 0.05 * span
    vb = (lo[0] - m, -(hi[1] + m), (hi[0] - lo[0]) + 2 * m, (hi[1] - lo[1]) + 2 * m)
    pairs = sorted({(min(s[4], s[5]), max(s[4], s[5])) for s in frame.segs})
    color = {p: _PALETTE[i % len(_PALETTE)] for i, p in enumerate(pairs)}

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="640" height="640" '
        f'viewBox="{vb[0]!r} {vb[1]!r} {vb[2]!r} {vb[3]!r}">',
        f"<desc>t={frame.t!r}</desc>",
        # flip y so the plot reads with y upward
        '<g transform="scale(1,-1)">',
        f'<g fill="none" stroke-width="{span / 300!r}" stroke-linecap="round">',
    ]
    for ax, ay, bx, by, L, R in frame.segs:
        c = color[(min(L, R), max(L, R))]
        out.append(f'<polyline stroke="{c}" points="{ax!r},{ay!r} {bx!r},{by!r}"/>')
    out.append("</g>")

    net = _frame_network(frame)
    inc = net.incidence()
    rad = span / 80
    markers = []
    for v in sorted(inc):
        if len(inc[v]) < 3:
            continue
        try:
            kind = classify_junction(net, v).kind
        except AnalysisError:
            kind = "unstable"
        x, y = net.vertices[v]
        markers.append(
            f'<circle class="junction {kind}" cx="{float(x)!r}" cy="{float(y)!r}" '
            f'r="{rad!r}" fill="#000000" fill-opacity="0.6"/>'
        )
    out.extend(markers)
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_frame(frame, fmt, sink):
    """Write one frame as ``csv`` or ``svg``; returns bytes written."""
    if fmt == "csv":
        return _write(sink, _frame_csv(frame))
    if fmt == "svg":
        return _write(sink, _frame_svg(frame))
    raise ValueError(f"unknown frame format {fmt!r} (want csv or svg)")


def write_metrics(rows, sink):
    """metrics.csv with the fixed column set; returns bytes written."""
    lines = [",".join(METRIC_COLUMNS)]
    for row in rows:
        vals = []
        for col in METRIC_COLUMNS:
            v = row[col]
            vals.append(str(int(v)) if col in METRIC_COLUMNS[5:] else repr(float(v)))
        lines.append(",".join(vals))
    return _write(sink, "\n".join(lines) + "\n")


def read_metrics(text):
    lines = [ln for ln in text.splitlines() if ln]
    if not lines or lines[0] != ",".join(METRIC_COLUMNS):
        raise ValueError("metrics csv header mismatch")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        row = {}
        for col, val in zip(METRIC_COLUMNS, parts):
            row[col] = int(val) if col in METRIC_COLUMNS[5:] else float(val)
        out.append(row)
    return out
