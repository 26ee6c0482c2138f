"""Scenario documents: JSON fixtures that deserialize to flow-ready networks.

Document format (``"schema": 1``)::

    {
      "schema": 1,
      "name": "cross90",
      "regions": 4,
      "box": [x0, y0, x1, y1],
      "vertices": [[x, y], ...],
      "edges": [[u, v, left, right], ...],
      "frozen": [vertex ids],            # optional, default []
      "flow": {"epsilon": 0.04, ...},    # optional FlowConfig overrides
      "analyze": {"angle_tol": 5.0, ...} # optional analyzer overrides
    }

Unknown keys are rejected with the offending path; the embedded network must
pass structural validation, and every region label 1..regions must actually
appear on some edge.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields as dc_fields, replace

import numpy as np

from .flow import FlowConfig
from .network import Network, validate


class ScenarioError(ValueError):
    """Raised for malformed scenario documents; message carries the path."""


_FLOW_KEYS = {f.name for f in dc_fields(FlowConfig)}
_INT_FLOW_KEYS = {"test_bank_size", "diagnostics_every", "seed"}
_ANALYZE_KEYS = {"angle_tol", "window", "merge_deg", "c6", "c7", "grid_n"}
_TOP_KEYS = {"schema", "name", "regions", "box", "vertices", "edges", "frozen", "flow", "analyze"}


@dataclass(frozen=True, eq=True)
class Scenario:
    name: str
    regions: int
    box: tuple
    vertices: tuple
    edges: tuple
    frozen: tuple = ()
    flow: dict = field(default_factory=dict)
    analyze: dict = field(default_factory=dict)

    def network(self):
        return Network(
            [np.array(p) for p in self.vertices],
            list(self.edges),
            self.regions,
            frozen=set(self.frozen),
            box=self.box,
        )

    def flow_config(self, **overrides):
        """FlowConfig with the document's overrides applied, then the caller's."""
        merged = dict(self.flow)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return replace(FlowConfig(), **merged)


def _num(val, path):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {type(val).__name__}")
    if not math.isfinite(val):
        raise ScenarioError(f"{path}: must be finite")
    return float(val)


def _int(val, path):
    if isinstance(val, bool) or not isinstance(val, int):
        raise ScenarioError(f"{path}: expected an integer, got {type(val).__name__}")
    return val


def parse_scenario(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ScenarioError(f"top level: expected an object, got {type(doc).__name__}")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ScenarioError(f"{key}: unknown key")
    for key in ("schema", "name", "regions", "box", "vertices", "edges"):
        if key not in doc:
            raise ScenarioError(f"{key}: missing required key")
    if doc["schema"] != 1:
        raise ScenarioError(f"schema: unsupported version {doc['schema']!r} (expected 1)")
    if not isinstance(doc["name"], str) or not doc["name"]:
        raise ScenarioError("name: expected a non-empty string")
    regions = _int(doc["regions"], "regions")
    if regions < 1:
        raise ScenarioError(f"regions: must be >= 1, got {regions}")

    box = doc["box"]
    if not isinstance(box, list) or len(box) != 4:
        raise ScenarioError("box: expected [x0, y0, x1, y1]")
    box = tuple(_num(c, f"box[{i}]") for i, c in enumerate(box))
    if not (box[0] < box[2] and box[1] < box[3]):
        raise ScenarioError(f"box: degenerate extent {box}")

    raw_verts = doc["vertices"]
    if not isinstance(raw_verts, list):
        raise ScenarioError("vertices: expected a list")
    verts = []
    for i, p in enumerate(raw_verts):
        if not isinstance(p, list) or len(p) != 2:
            raise ScenarioError(f"vertices[{i}]: expected [x, y]")
        verts.append((_num(p[0], f"vertices[{i}][0]"), _num(p[1], f"vertices[{i}][1]")))

    raw_edges = doc["edges"]
    if not isinstance(raw_edges, list):
        raise ScenarioError("edges: expected a list")
    edges = []
    for i, e in enumerate(raw_edges):
        if not isinstance(e, list) or len(e) != 4:
            raise ScenarioError(f"edges[{i}]: expected [u, v, left, right]")
        u, v, L, R = (_int(c, f"edges[{i}][{k}]") for k, c in enumerate(e))
        if not (0 <= u < len(verts) and 0 <= v < len(verts)):
            raise ScenarioError(f"edges[{i}]: vertex id out of range")
        edges.append((u, v, L, R))

    frozen = doc.get("frozen", [])
    if not isinstance(frozen, list):
        raise ScenarioError("frozen: expected a list of vertex ids")
    frozen = tuple(sorted({_int(i, f"frozen[{k}]") for k, i in enumerate(frozen)}))
    for i in frozen:
        if not 0 <= i < len(verts):
            raise ScenarioError(f"frozen: vertex id {i} out of range")

    flow = doc.get("flow", {})
    if not isinstance(flow, dict):
        raise ScenarioError("flow: expected an object")
    for key, val in flow.items():
        if key not in _FLOW_KEYS:
            raise ScenarioError(f"flow.{key}: unknown key")
        if key in _INT_FLOW_KEYS:
            _int(val, f"flow.{key}")
        else:
            flow = {**flow, key: _num(val, f"flow.{key}")}

    analyze = doc.get("analyze", {})
    if not isinstance(analyze, dict):
        raise ScenarioError("analyze: expected an object")
    for key, val in analyze.items():
        if key not in _ANALYZE_KEYS:
            raise ScenarioError(f"analyze.{key}: unknown key")
        if key in ("window", "grid_n"):
            _int(val, f"analyze.{key}")
        else:
            analyze = {**analyze, key: _num(val, f"analyze.{key}")}

    sc = Scenario(doc["name"], regions, box, tuple(verts), tuple(edges), frozen, dict(flow), dict(analyze))

    report = validate(sc.network())
    if report:
        raise ScenarioError(f"invalid network: {'; '.join(report)}")
    used = {lab for e in edges for lab in e[2:]}
    if used != set(range(1, regions + 1)):
        raise ScenarioError(
            f"regions: declared {regions} but edge labels used are {sorted(used)}"
        )
    try:
        sc.flow_config()
    except ValueError as exc:
        raise ScenarioError(f"flow: inconsistent overrides: {exc}") from None
    return sc


def serialize(sc):
    """Deterministic JSON text; floats use shortest round-trip decimals."""
    doc = {
        "schema": 1,
        "name": sc.name,
        "regions": sc.regions,
        "box": list(sc.box),
        "vertices": [list(p) for p in sc.vertices],
        "edges": [list(e) for e in sc.edges],
        "frozen": list(sc.frozen),
    }
    if sc.flow:
        doc["flow"] = {k: sc.flow[k] for k in sorted(sc.flow)}
    if sc.analyze:
        doc["analyze"] = {k: sc.analyze[k] for k in sorted(sc.analyze)}
    return json.dumps(doc, indent=2) + "\n"


# -- bundled fixtures ----------------------------------------------------
#
# Wedge bookkeeping for stars: sort the spokes by angle; spoke k carries
# left = the region counterclockwise of it, right = the region clockwise,
# i.e. right(spoke k) == left(spoke k-1).


def _cross90():
    verts = ((0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))
    edges = ((0, 1, 1, 4), (0, 2, 2, 1), (0, 3, 3, 2), (0, 4, 4, 3))
    flow = {"epsilon": 0.04, "dt": 4e-4, "j": 1.0, "r_def": 0.5, "l_min": 0.01, "l_max": 0.04}
    return Scenario("cross90", 4, (-1.0, -1.0, 1.0, 1.0), verts, edges, (1, 2, 3, 4), flow)


def _circle(R=1.0, n=720):
    th = np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    verts = tuple((float(R * math.cos(a)), float(R * math.sin(a))) for a in th)
    edges = tuple((k, (k + 1) % n, 2, 1) for k in range(n))  # ccw: interior on the left
    b = 1.5 * R
    return Scenario("circle", 2, (-b, -b, b, b), verts, edges)


def _triple():
    t = 2.0 / math.sqrt(3.0)  # reach of the slanted spokes to the box walls
    verts = ((0.0, 0.0), (0.0, 1.0), (-1.0, float(-0.5 * t)), (1.0, float(-0.5 * t)))
    edges = ((0, 1, 1, 3), (0, 2, 2, 1), (0, 3, 3, 2))
    return Scenario("triple", 3, (-1.0, -1.0, 1.0, 1.0), verts, edges, (1, 2, 3))


def _theta():
    # circle of radius 0.6 plus its horizontal diameter; lobes 2 (upper) and
    # 3 (lower), exterior 1
    R, m = 0.6, 64
    verts = [(R, 0.0), (-R, 0.0)]
    edges = []

    def arc(start_id, end_id, a0, a1, left, right):
        prev = start_id
        for k in range(1, m):
            a = a0 + (a1 - a0) * k / m
            verts.append((float(R * math.cos(a)), float(R * math.sin(a))))
            edges.append((prev, len(verts) - 1, left, right))
            prev = len(verts) - 1
        edges.append((prev, end_id, left, right))

    arc(0, 1, 0.0, math.pi, 2, 1)  # upper arc, ccw
    arc(1, 0, math.pi, 2.0 * math.pi, 3, 1)  # lower arc, ccw
    prev = 1
    for k in range(1, 40):
        verts.append((float(-R + 2 * R * k / 40), 0.0))
        edges.append((prev, len(verts) - 1, 2, 3))
        prev = len(verts) - 1
    edges.append((prev, 0, 2, 3))
    return Scenario("theta", 3, (-1.0, -1.0, 1.0, 1.0), tuple(verts), tuple(edges))


def _hexagon6():
    # honeycomb cell: regular hexagon (region 7) with radial spokes to the
    # box walls separating outer regions 1..6; every junction is a 120 triple
    r = 0.5
    corners = [(float(r * math.cos(math.pi * k / 3)), float(r * math.sin(math.pi * k / 3))) for k in range(6)]
    tips = []
    for k in range(6):
        d = np.array([math.cos(math.pi * k / 3), math.sin(math.pi * k / 3)])
        t = 1.0 / max(abs(d[0]), abs(d[1]))
        tips.append((float(t * d[0]), float(t * d[1])))
    verts = tuple(corners + tips)
    edges = []
    for k in range(6):
        edges.append((k, 6 + k, k + 1, (k - 1) % 6 + 1))  # spoke
        edges.append((k, (k + 1) % 6, 7, k + 1))  # hexagon side, ccw
    return Scenario("hexagon6", 7, (-1.0, -1.0, 1.0, 1.0), verts, tuple(edges), tuple(range(6, 12)))


def _two_circles(R=0.45, n=256):
    verts = []
    edges = []
    for ci, (cx, lab) in enumerate([(-0.55, 2), (0.55, 3)]):
        base = len(verts)
        for k in range(n):
            a = 2.0 * math.pi * k / n
            verts.append((float(cx + R * math.cos(a)), float(R * math.sin(a))))
        edges.extend((base + k, base + (k + 1) % n, lab, 1) for k in range(n))
    return Scenario("two-circles", 3, (-1.25, -0.75, 1.25, 0.75), tuple(verts), tuple(edges))


_BUNDLED = {
    "cross90": _cross90,
    "circle": _circle,
    "triple": _triple,
    "theta": _theta,
    "hexagon6": _hexagon6,
    "two-circles": _two_circles,
}


def bundled_names():
    return sorted(_BUNDLED)


def bundled(name):
    if name not in _BUNDLED:
        raise ScenarioError(f"unknown bundled scenario {name!r} (have: {', '.join(bundled_names())})")
    return _BUNDLED[name]()
