"""Command-line surface: run scenarios, analyze frame dumps, validate documents.

Exit codes: 0 success, 2 validation failure, 1 runtime error, 64 usage error.
``BRAKKENET_THREADS`` caps the analyze phase's worker pool; everything else is
single-threaded orchestration.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .analyze import AnalysisError, classify_junction, graph_decomposition, tangent_cone
from .flow import run
from .frames import frame_of, emit_frame, parse_frame, write_metrics
from .scenarios import ScenarioError, bundled, bundled_names, parse_scenario, serialize


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; the contract wants 64 with usage text
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _load_scenario(ref):
    p = Path(ref)
    if p.exists():
        return parse_scenario(p.read_text())
    if ref in bundled_names():
        return bundled(ref)
    raise ScenarioError(
        f"{ref!r} is neither a scenario file nor a bundled name (have: {', '.join(bundled_names())})"
    )


def _cmd_validate(args):
    sc = _load_scenario(args.scenario)
    print(f"ok: {sc.name} ({sc.regions} regions, {len(sc.vertices)} vertices, {len(sc.edges)} edges)")
    return 0


def _cmd_demo(args):
    sc = bundled(args.name)
    out = Path(args.out) if args.out else Path(f"{sc.name}.json")
    out.write_text(serialize(sc))
    print(out)
    return 0


def _cmd_run(args):
    sc = _load_scenario(args.scenario)
    cfg = sc.flow_config(dt=args.dt, epsilon=args.epsilon, j=args.j)
    outdir = Path(args.out) if args.out else Path(f"{sc.name}_run")
    outdir.mkdir(parents=True, exist_ok=True)

    counter = [0]

    def sink(t, net):
        emit_frame(frame_of(t, net), "csv", outdir / f"frame_{counter[0]:06d}.csv")
        if args.svg:
            emit_frame(frame_of(t, net), "svg", outdir / f"frame_{counter[0]:06d}.svg")
        counter[0] += 1

    res = run(sc.network(), cfg, args.T, sink=sink)
    write_metrics(res.history, outdir / "metrics.csv")
    if res.extinction_time is not None:
        (outdir / "extinction.txt").write_text(f"{res.extinction_time!r}\n")
        print(f"extinct at t={res.extinction_time!r}")
    print(
        f"t={res.t!r} mass={res.net.total_length()!r} frames={counter[0]} "
        f"budget_ok={res.budget_ok} -> {outdir}"
    )
    return 0


def _junction_rows(item):
    idx, frame = item
    net = _frame_to_network(frame)
    inc = net.incidence()
    rows = []
    for v in sorted(inc):
        if len(inc[v]) < 2:
            continue
        try:
            c = classify_junction(net, v)
        except AnalysisError as exc:
            rows.append((idx, frame.t, *net.vertices[v], len(inc[v]), f"error:{exc}", "", ""))
            continue
        seps = c.separations
        rows.append(
            (idx, frame.t, *net.vertices[v], len(inc[v]), c.kind,
             round(min(seps), 4), round(max(seps), 4))
        )
    return rows


def _frame_to_network(frame):
    from .frames import _frame_network

    return _frame_network(frame)


def _support_samples(net, spacing):
    pts = []
    wts = []
    for _, (u, v, _, _) in net.live_edges():
        a, b = net.vertices[u], net.vertices[v]
        L = float(np.hypot(*(np.asarray(b) - a)))
        n = max(1, int(math.ceil(L / spacing)))
        s = (np.arange(n) + 0.5) / n
        pts.append(np.asarray(a)[None, :] * (1 - s[:, None]) + np.asarray(b)[None, :] * s[:, None])
        wts.append(np.full(n, L / n))
    return np.concatenate(pts), np.concatenate(wts)


_CONE_RADII = (0.05, 0.075, 0.1125)


def _cone_rows(item):
    idx, frame = item
    net = _frame_to_network(frame)
    inc = net.incidence()
    centers = [v for v in sorted(inc) if len(inc[v]) >= 3]
    if not centers:
        return []
    pts, wts = _support_samples(net, min(_CONE_RADII) / 8)
    rows = []
    for v in centers:
        fit = tangent_cone(pts, wts, net.vertices[v], _CONE_RADII)
        rows.append((idx, frame.t, *net.vertices[v], fit.label, round(fit.residual, 6), int(fit.stable)))
    return rows


def _graph_rows(item):
    idx, frame = item
    net = _frame_to_network(frame)
    inc = net.incidence()
    flat = [v for v in sorted(inc) if len(inc[v]) == 2]
    rows = []
    for v in flat[:: max(1, len(flat) // 8)]:
        a = net.vertices[v]
        d = net.outgoing_dir(inc[v][0], v)
        try:
            patch = graph_decomposition(net, a, 0.12, axis=(float(d[0]), float(d[1])))
            rows.append((idx, frame.t, *a, patch.nu, 1, ""))
        except AnalysisError as exc:
            rows.append((idx, frame.t, *a, 0, 0, str(exc).split(":")[0]))
    return rows


def _write_report(path, header, row_lists):
    lines = [header]
    for rows in row_lists:
        for row in rows:
            lines.append(",".join(repr(float(x)) if isinstance(x, float) else str(x) for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _cmd_analyze(args):
    d = Path(args.frames_dir)
    files = sorted(d.glob("frame_*.csv"))
    if not files:
        raise ScenarioError(f"no frame_*.csv files in {d}")
    frames = [parse_frame(f.read_text()) for f in files]
    want_all = not (args.angles or args.cones or args.graphs)
    workers = int(os.environ.get("BRAKKENET_THREADS", 0) or 0) or min(8, os.cpu_count() or 1)
    items = list(enumerate(frames))
    with ThreadPoolExecutor(max_workers=max(1, min(workers, len(items)))) as pool:
        if args.angles or want_all:
            _write_report(
                d / "angles.csv",
                "frame,t,x,y,degree,kind,min_sep,max_sep",
                pool.map(_junction_rows, items),
            )
        if args.cones or want_all:
            _write_report(
                d / "cones.csv",
                "frame,t,x,y,label,residual,stable",
                pool.map(_cone_rows, items),
            )
        if args.graphs or want_all:
            _write_report(
                d / "graphs.csv",
                "frame,t,x,y,nu,ok,error",
                pool.map(_graph_rows, items),
            )
    print(f"analyzed {len(frames)} frames -> {d}")
    return 0


def _build_parser():
    p = _Parser(prog="brakkenet", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    pr = sub.add_parser("run", help="flow a scenario, writing frames and metrics.csv")
    pr.add_argument("scenario", help="scenario file or bundled name")
    pr.add_argument("--T", type=float, required=True, help="flow duration")
    pr.add_argument("--dt", type=float, default=None)
    pr.add_argument("--epsilon", type=float, default=None)
    pr.add_argument("--j", type=float, default=None)
    pr.add_argument("--out", default=None, help="output directory (default <name>_run)")
    pr.add_argument("--svg", action="store_true", help="also write svg frames")
    pr.set_defaults(fn=_cmd_run)

    pa = sub.add_parser("analyze", help="write analyzer reports for a frames directory")
    pa.add_argument("frames_dir")
    pa.add_argument("--angles", action="store_true")
    pa.add_argument("--cones", action="store_true")
    pa.add_argument("--graphs", action="store_true")
    pa.set_defaults(fn=_cmd_analyze)

    pv = sub.add_parser("validate", help="check a scenario document")
    pv.add_argument("scenario")
    pv.set_defaults(fn=_cmd_validate)

    pd = sub.add_parser("demo", help="write a bundled scenario to a json file")
    pd.add_argument("name", help=", ".join(bundled_names()))
    pd.add_argument("--out", default=None)
    pd.set_defaults(fn=_cmd_demo)
    return p


def cli(argv=None):
    try:
        args = _build_parser().parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 64
    try:
        return args.fn(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 1
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli())


if __name__ == "__main__":
    main()
