"""Labeled planar partition networks.

A Network is a straight-edge planar graph whose edges separate labeled open
regions (labels 1..regions).  Each edge (u, v, left, right) carries the region
label on its left and right when traveling u -> v.  Frozen vertices never move;
degree-1 vertices must be frozen (they clip unbounded structure at the domain
box).  Vertex/edge slots may be tombstoned (None) while a network is being
edited; public operations return compacted networks.
"""

from __future__ import annotations

import math
from collections import defaultdict

import numpy as np

from .varifold import Varifold1

TWO_PI = 2.0 * math.pi


class Network:
    def __init__(self, vertices, edges, regions, frozen=(), box=None):
        self.vertices = [None if p is None else np.asarray(p, dtype=float) for p in vertices]
        self.edges = [None if e is None else (int(e[0]), int(e[1]), int(e[2]), int(e[3])) for e in edges]
        self.regions = int(regions)
        self.frozen = set(int(i) for i in frozen)
        self.box = None if box is None else tuple(float(c) for c in box)

    # -- basic accessors -------------------------------------------------

    def copy(self):
        # vertex arrays are rebound on every edit, never mutated in place, so
        # copies share them; editing a copy leaves the original untouched
        return Network(
            list(self.vertices),
            list(self.edges),
            self.regions,
            set(self.frozen),
            self.box,
        )

    def live_edges(self):
        return [(i, e) for i, e in enumerate(self.edges) if e is not None]

    def live_vertex_ids(self):
        return [i for i, p in enumerate(self.vertices) if p is not None]

    def edge_length(self, ei):
        u, v, _, _ = self.edges[ei]
        return float(np.hypot(*(self.vertices[v] - self.vertices[u])))

    def total_length(self):
        live = self.live_edges()
        if not live:
            return 0.0
        A = np.array([self.vertices[e[0]] for _, e in live])
        B = np.array([self.vertices[e[1]] for _, e in live])
        return float(np.hypot(*(B - A).T).sum())

    def incidence(self):
        """vertex id -> list of edge ids touching it."""
        inc = defaultdict(list)
        for i, (u, v, _, _) in self.live_edges():
            inc[u].append(i)
            inc[v].append(i)
        return inc

    def degree(self, v, inc=None):
        inc = inc if inc is not None else self.incidence()
        return len(inc.get(v, ()))

    def outgoing_dir(self, ei, v):
        """Unit vector from v along edge ei (v must be an endpoint)."""
        u, w, _, _ = self.edges[ei]
        other = w if u == v else u
        d = self.vertices[other] - self.vertices[v]
        n = np.hypot(*d)
        if n == 0:
            raise ValueError(f"zero-length edge {ei}")
        return d / n

    def bounding_box(self, margin=0.0):
        P = np.array([p for p in self.vertices if p is not None])
        lo, hi = P.min(axis=0), P.max(axis=0)
        return (float(lo[0] - margin), float(lo[1] - margin), float(hi[0] + margin), float(hi[1] + margin))

    def junction_census(self):
        """Counts of vertices by degree, for degrees >= 3."""
        inc = self.incidence()
        out = defaultdict(int)
        for v in self.live_vertex_ids():
            d = len(inc.get(v, ()))
            if d >= 3:
                out[d] += 1
        return dict(out)

    # -- editing helpers (used by sweep/remesh; ids stay stable) ---------

    def add_vertex(self, p):
        self.vertices.append(np.asarray(p, dtype=float))
        return len(self.vertices) - 1

    def add_edge(self, u, v, left, right):
        self.edges.append((int(u), int(v), int(left), int(right)))
        return len(self.edges) - 1

    def remove_edge(self, ei):
        self.edges[ei] = None

    def remove_vertex(self, vi):
        self.vertices[vi] = None
        self.frozen.discard(vi)

    def compact(self):
        """Drop tombstones, renumber vertices densely."""
        remap = {}
        verts = []
        for i, p in enumerate(self.vertices):
            if p is not None:
                remap[i] = len(verts)
                verts.append(p.copy())
        edges = [(remap[u], remap[v], l, r) for _, (u, v, l, r) in self.live_edges()]
        frozen = {remap[i] for i in self.frozen if i in remap}
        return Network(verts, edges, self.regions, frozen, self.box)

    # -- geometry exports ------------------------------------------------

    def to_varifold(self, ghost=0.0):
        """Segments of the network; with ghost > 0, edges ending at a frozen
        degree-1 vertex are extended straight outward by that length so
        mollified fields do not see an artificial boundary atom."""
        live = self.live_edges()
        if not live:
            raise ValueError("empty network has no varifold")
        A = [self.vertices[u] for _, (u, v, _, _) in live]
        B = [self.vertices[v] for _, (u, v, _, _) in live]
        if ghost > 0.0:
            inc = self.incidence()
            for v in self.frozen:
                if len(inc.get(v, ())) == 1:
                    ei = inc[v][0]
                    d = -self.outgoing_dir(ei, v)  # continue past the clip point
                    A.append(self.vertices[v])
                    B.append(self.vertices[v] + ghost * d)
        return Varifold1.from_arrays(np.array(A), np.array(B))

    def sample_support(self, spacing):
        """(points, weights) sampled along edges, weight = covered length."""
        pts, wts = [], []
        for _, (u, v, _, _) in self.live_edges():
            a, b = self.vertices[u], self.vertices[v]
            L = float(np.hypot(*(b - a)))
            n = max(1, int(math.ceil(L / spacing)))
            t = (np.arange(n) + 0.5) / n
            pts.append(a[None, :] + t[:, None] * (b - a)[None, :])
            wts.append(np.full(n, L / n))
        return np.vstack(pts), np.concatenate(wts)

    def with_vertices(self, positions):
        """Same topology with replaced vertex positions (dict id -> point)."""
        out = self.copy()
        for i, p in positions.items():
            if out.vertices[i] is None:
                raise ValueError(f"vertex {i} is deleted")
            out.vertices[i] = np.asarray(p, dtype=float)
        return out


def junction_defect(net, v):
    """Sum of outgoing unit tangents at vertex v; zero iff the junction is
    first-variation balanced."""
    inc = net.incidence()
    ids = inc.get(v, ())
    if not ids:
        raise ValueError(f"vertex {v} is isolated")
    return np.sum([net.outgoing_dir(ei, v) for ei in ids], axis=0)


# -- validation ---------------------------------------------------------


def _halfedge_side_labels(edge, at_tail):
    """(ccw_label, cw_label) around a vertex for one incident edge.

    Traveling u -> v with left label L: at the tail u the region immediately
    counterclockwise of the outgoing direction is L; at the head v (outgoing
    direction points back along the edge) the roles swap.
    """
    _, _, L, R = edge
    return (L, R) if at_tail else (R, L)


def validate(net):
    """Structural validation; returns a list of violation strings (empty = ok)."""
    v = []
    live = set(net.live_vertex_ids())
    if live:
        P = np.array([net.vertices[i] for i in sorted(live)])
        if not np.all(np.isfinite(P)):
            for i in sorted(live):
                if not np.all(np.isfinite(net.vertices[i])):
                    v.append(f"vertex {i}: non-finite coordinates")
    for i in net.frozen:
        if i not in live:
            v.append(f"frozen id {i} is not a live vertex")

    edges = net.live_edges()
    lengths = {}
    if edges:
        A = np.array([net.vertices[e[0]] for _, e in edges])
        B = np.array([net.vertices[e[1]] for _, e in edges])
        lengths = dict(zip((ei for ei, _ in edges), np.hypot(*(B - A).T)))
    inc = defaultdict(list)
    seen_pairs = {}
    for ei, e in edges:
        u, w, L, R = e
        if u not in live or w not in live:
            v.append(f"edge {ei}: endpoint missing")
            continue
        if u == w:
            v.append(f"edge {ei}: loop at vertex {u}")
            continue
        if lengths[ei] == 0.0:
            v.append(f"edge {ei}: zero length")
            continue
        for lab in (L, R):
            if not 1 <= lab <= net.regions:
                v.append(f"edge {ei}: label {lab} outside 1..{net.regions}")
        if L == R:
            v.append(f"edge {ei}: phantom edge (left == right == {L})")
        key = (min(u, w), max(u, w))
        if key in seen_pairs:
            v.append(f"edge {ei}: duplicate of edge {seen_pairs[key]}")
        seen_pairs[key] = ei
        inc[u].append(ei)
        inc[w].append(ei)

    if v:
        return v  # geometry below assumes structurally sane edges

    for vid in live:
        ids = inc.get(vid, ())
        if not ids:
            v.append(f"vertex {vid}: isolated")
        elif len(ids) == 1 and vid not in net.frozen:
            v.append(f"vertex {vid}: free endpoint is not frozen")

    v.extend(_label_consistency_violations(net, inc))
    v.extend(_crossing_violations(net))
    return v


def _label_consistency_violations(net, inc):
    out = []
    for vid, ids in inc.items():
        deg = len(ids)
        if deg < 2:
            continue
        if deg == 2:
            # two incident edges: the adjacency constraints do not depend on
            # the angular order, so skip the trigonometry
            e1, e2 = ids
            ccw1, cw1 = _halfedge_side_labels(net.edges[e1], net.edges[e1][0] == vid)
            ccw2, cw2 = _halfedge_side_labels(net.edges[e2], net.edges[e2][0] == vid)
            if ccw1 != cw2:
                out.append(f"vertex {vid}: label mismatch between edges {e1} and {e2} ({ccw1} vs {cw2})")
            if ccw2 != cw1:
                out.append(f"vertex {vid}: label mismatch between edges {e2} and {e1} ({ccw2} vs {cw1})")
            continue
        entries = []
        for ei in ids:
            u, w, _, _ = net.edges[ei]
            d = net.outgoing_dir(ei, vid)
            ccw, cw = _halfedge_side_labels(net.edges[ei], at_tail=(u == vid))
            entries.append((math.atan2(d[1], d[0]), ei, ccw, cw))
        entries.sort()
        n = len(entries)
        for k in range(n):
            _, ei, ccw, _ = entries[k]
            _, ej, _, cw_next = entries[(k + 1) % n]
            if ccw != cw_next:
                out.append(
                    f"vertex {vid}: label mismatch between edges {ei} and {ej} ({ccw} vs {cw_next})"
                )
    return out


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _crossing_violations(net):
    edges = net.live_edges()
    if len(edges) < 2:
        return []
    ids = [ei for ei, _ in edges]
    A = np.array([net.vertices[e[0]] for _, e in edges])
    B = np.array([net.vertices[e[1]] for _, e in edges])
    lo = np.minimum(A, B)
    hi = np.maximum(A, B)
    cell = max(float(np.median(np.hypot(*(B - A).T))) * 2.0, 1e-9)
    grid = defaultdict(list)
    ilo = np.floor(lo / cell).astype(int)
    ihi = np.floor(hi / cell).astype(int)
    for k in range(len(edges)):
        for cx in range(ilo[k, 0], ihi[k, 0] + 1):
            for cy in range(ilo[k, 1], ihi[k, 1] + 1):
                grid[(cx, cy)].append(k)
    pairs = set()
    for bucket in grid.values():
        for a_i in range(len(bucket)):
            for b_i in range(a_i + 1, len(bucket)):
                pairs.add((bucket[a_i], bucket[b_i]))
    if not pairs:
        return []
    kk = np.array([p[0] for p in pairs])
    mm = np.array([p[1] for p in pairs])
    keep = ~np.any((hi[kk] < lo[mm]) | (hi[mm] < lo[kk]), axis=1)
    kk, mm = kk[keep], mm[keep]
    if not kk.size:
        return []

    def cross2(ax, ay, bx, by):
        return ax * by - ay * bx

    p1, p2, q1, q2 = A[kk], B[kk], A[mm], B[mm]
    qd = q2 - q1
    pd = p2 - p1
    d1 = cross2(qd[:, 0], qd[:, 1], (p1 - q1)[:, 0], (p1 - q1)[:, 1])
    d2 = cross2(qd[:, 0], qd[:, 1], (p2 - q1)[:, 0], (p2 - q1)[:, 1])
    d3 = cross2(pd[:, 0], pd[:, 1], (q1 - p1)[:, 0], (q1 - p1)[:, 1])
    d4 = cross2(pd[:, 0], pd[:, 1], (q2 - p1)[:, 0], (q2 - p1)[:, 1])
    proper = (
        ((d1 > 0) != (d2 > 0))
        & ((d3 > 0) != (d4 > 0))
        & (d1 != 0)
        & (d2 != 0)
        & (d3 != 0)
        & (d4 != 0)
    )

    def on_seg(p, a, b):
        return (
            (np.minimum(a[:, 0], b[:, 0]) <= p[:, 0])
            & (p[:, 0] <= np.maximum(a[:, 0], b[:, 0]))
            & (np.minimum(a[:, 1], b[:, 1]) <= p[:, 1])
            & (p[:, 1] <= np.maximum(a[:, 1], b[:, 1]))
        )

    touches = (
        ((d1 == 0) & on_seg(p1, q1, q2)).astype(int)
        + ((d2 == 0) & on_seg(p2, q1, q2)).astype(int)
        + ((d3 == 0) & on_seg(q1, p1, p2)).astype(int)
        + ((d4 == 0) & on_seg(q2, p1, p2)).astype(int)
    )
    U = np.array([(e[0], e[1]) for _, e in edges])
    shared = (
        (U[kk, 0] == U[mm, 0])
        | (U[kk, 0] == U[mm, 1])
        | (U[kk, 1] == U[mm, 0])
        | (U[kk, 1] == U[mm, 1])
    )
    # sharing one endpoint is legal; a collinear overlap shows as >= 3 hits
    conflict = proper | np.where(shared, touches >= 3, touches >= 1)
    out = [
        f"edges {min(ids[k], ids[m])} and {max(ids[k], ids[m])} cross or overlap"
        for k, m in zip(kk[conflict], mm[conflict])
    ]
    return sorted(set(out))


# -- faces and region areas ---------------------------------------------


def _face_trace(vertices, halfedges, outgoing):
    """Trace faces of a planar straight-line graph.

    halfedges: list of (tail, head, label_or_None).  outgoing: vertex ->
    [(angle, he_index)] sorted.  Returns list of faces as dicts with signed
    area, labels seen, and half-edge indices.
    """
    next_he = {}
    for he_i, (u, w, _) in enumerate(halfedges):
        d = vertices[u] - vertices[w]
        back = math.atan2(d[1], d[0])
        cands = outgoing[w]
        best, best_key = None, None
        for ang, he_j in cands:
            delta = (back - ang) % TWO_PI
            if delta <= 1e-12:
                delta = TWO_PI  # pure backtrack is the last resort
            if best_key is None or delta < best_key:
                best, best_key = he_j, delta
        next_he[he_i] = best
    faces = []
    seen = set()
    for he_i in range(len(halfedges)):
        if he_i in seen:
            continue
        cycle = []
        cur = he_i
        while cur not in seen:
            seen.add(cur)
            cycle.append(cur)
            cur = next_he[cur]
        area = 0.0
        labels = set()
        for c in cycle:
            u, w, lab = halfedges[c]
            pu, pw = vertices[u], vertices[w]
            area += pu[0] * pw[1] - pw[0] * pu[1]
            if lab is not None:
                labels.add(lab)
        faces.append({"area": 0.5 * area, "labels": labels, "halfedges": cycle})
    return faces


def _box_ring_points(box, on_box):
    """Corner + attachment points of the box ring, in ccw order starting at
    the lower-left corner.  on_box: list of (vertex_id, point)."""
    x0, y0, x1, y1 = box
    corners = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    sides = []
    for k in range(4):
        a = np.array(corners[k])
        b = np.array(corners[(k + 1) % 4])
        d = b - a
        along = []
        for vid, p in on_box:
            t = np.dot(p - a, d) / np.dot(d, d)
            if -1e-12 <= t <= 1 + 1e-12 and abs(_cross(tuple(a), tuple(b), tuple(p))) < 1e-9:
                along.append((float(t), vid))
        along.sort()
        sides.append(along)
    return corners, sides


def region_areas(net):
    """Map label -> area of that region inside the network's box.

    The box (net.box, or the vertex bounding box) is stitched in as a ring of
    auxiliary edges so that clipped unbounded regions close; signed face areas
    then sum to per-label areas, with nesting handled by sign.
    """
    live = net.live_edges()
    if not live:
        raise ValueError("region_areas needs a non-empty network")
    box = net.box or net.bounding_box()
    verts = {i: p for i, p in enumerate(net.vertices) if p is not None}
    x0, y0, x1, y1 = box
    eps = 1e-9
    on_box, interior_frozen_tips = [], []
    inc = net.incidence()
    for i, p in verts.items():
        on = (
            abs(p[0] - x0) < eps or abs(p[0] - x1) < eps or abs(p[1] - y0) < eps or abs(p[1] - y1) < eps
        )
        if on:
            on_box.append((i, p))
        elif len(inc.get(i, ())) == 1:
            interior_frozen_tips.append(i)
    if interior_frozen_tips:
        raise ValueError(
            f"region areas undefined: clipped endpoints {interior_frozen_tips} lie strictly inside the box"
        )

    # assemble the augmented vertex table: network vertices + ring corners
    points = dict(verts)
    next_id = (max(points) + 1) if points else 0
    corners, sides = _box_ring_points(box, on_box)
    corner_ids = []
    for c in corners:
        points[next_id] = np.array(c, dtype=float)
        corner_ids.append(next_id)
        next_id += 1

    halfedges = []

    def add_pair(u, w, left_lab, right_lab):
        halfedges.append((u, w, left_lab))
        halfedges.append((w, u, right_lab))

    for _, (u, w, L, R) in live:
        add_pair(u, w, L, R)
    for k in range(4):
        chain = [corner_ids[k]] + [vid for _, vid in sides[k]] + [corner_ids[(k + 1) % 4]]
        for a, b in zip(chain[:-1], chain[1:]):
            if a != b:
                add_pair(a, b, None, None)

    outgoing = defaultdict(list)
    for he_i, (u, w, _) in enumerate(halfedges):
        d = points[w] - points[u]
        outgoing[u].append((math.atan2(d[1], d[0]), he_i))
    for u in outgoing:
        outgoing[u].sort()

    faces = _face_trace(points, halfedges, outgoing)
    areas = defaultdict(float)
    ring_only_faces = []
    for f in faces:
        if len(f["labels"]) > 1:
            raise ValueError(f"inconsistent labels {sorted(f['labels'])} around one face")
        if f["labels"]:
            areas[next(iter(f["labels"]))] += f["area"]
        else:
            ring_only_faces.append(f)
    if ring_only_faces:
        # pure-ring faces: the inner one (positive area) belongs to the outer
        # region of the raw network; the outer traversal is the world outside
        inner = [f for f in ring_only_faces if f["area"] > 0]
        if inner:
            outer_label = _outer_region_label(net)
            for f in inner:
                areas[outer_label] += f["area"]
    return dict(areas)


def _outer_region_label(net):
    """Label of the region touching infinity, from the raw network's outer face."""
    live = net.live_edges()
    points = {i: p for i, p in enumerate(net.vertices) if p is not None}
    halfedges = []
    for _, (u, w, L, R) in live:
        halfedges.append((u, w, L))
        halfedges.append((w, u, R))
    outgoing = defaultdict(list)
    for he_i, (u, w, _) in enumerate(halfedges):
        d = points[w] - points[u]
        outgoing[u].append((math.atan2(d[1], d[0]), he_i))
    for u in outgoing:
        outgoing[u].sort()
    faces = _face_trace(points, halfedges, outgoing)
    outer = min(faces, key=lambda f: f["area"])
    if not outer["labels"]:
        raise ValueError("cannot determine outer region label")
    return next(iter(outer["labels"]))


def region_area_changes(before, after):
    """Per-label signed area change (after minus before) inside the box."""
    a0 = region_areas(before)
    a1 = region_areas(after)
    return {lab: a1.get(lab, 0.0) - a0.get(lab, 0.0) for lab in set(a0) | set(a1)}


# -- remesh --------------------------------------------------------------


def remesh(net, l_min, l_max):
    """Split edges longer than l_max; merge nearly-collinear degree-2 chains of
    edges shorter than l_min when the merge changes length by <= 1e-9.

    Returns the input network object unchanged when nothing needs doing."""
    if l_min <= 0 or l_max < 3 * l_min:
        raise ValueError(f"need 0 < l_min and l_max >= 3*l_min, got {l_min}, {l_max}")
    live = net.live_edges()
    if not live:
        return net
    A = np.array([net.vertices[e[0]] for _, e in live])
    B = np.array([net.vertices[e[1]] for _, e in live])
    lengths = np.hypot(*(B - A).T)
    long_ids = [i for (i, _), ln in zip(live, lengths) if ln > l_max]
    if not long_ids and not np.any(lengths < l_min):
        return net

    out = net.copy()
    for ei in long_ids:
        u, v, L, R = out.edges[ei]
        a, b = out.vertices[u], out.vertices[v]
        k = int(math.ceil(float(np.hypot(*(b - a))) / l_max))
        ids = [u] + [out.add_vertex(a + (b - a) * (j / k)) for j in range(1, k)] + [v]
        out.remove_edge(ei)
        for p, q in zip(ids[:-1], ids[1:]):
            out.add_edge(p, q, L, R)

    changed = True
    while changed:
        changed = False
        live = out.live_edges()
        A = np.array([out.vertices[e[0]] for _, e in live])
        B = np.array([out.vertices[e[1]] for _, e in live])
        lens = np.hypot(*(B - A).T)
        short = {i for (i, _), ln in zip(live, lens) if ln < l_min}
        if not short:
            break
        inc = out.incidence()
        consumed = {}  # merged-away edge id -> replacement length
        rescan = False
        for vid in sorted(inc):
            ids = inc.get(vid, ())
            if len(ids) != 2 or vid in out.frozen:
                continue
            e1, e2 = ids
            if e1 in consumed or e2 in consumed:
                # neighbor merged this pass; revisit only if a short pair is
                # still plausible here
                c1 = consumed[e1] < l_min if e1 in consumed else e1 in short
                c2 = consumed[e2] < l_min if e2 in consumed else e2 in short
                rescan = rescan or (c1 and c2)
                continue
            if e1 not in short or e2 not in short:
                continue
            # orient the chain a -> vid -> b and carry labels along it
            u1, v1, L1, R1 = out.edges[e1]
            a, lab = (u1, (L1, R1)) if v1 == vid else (v1, (R1, L1))
            u2, v2, L2, R2 = out.edges[e2]
            b, lab2 = (v2, (L2, R2)) if u2 == vid else (u2, (R2, L2))
            if lab != lab2 or a == b:
                continue
            pa, pv, pb = out.vertices[a], out.vertices[vid], out.vertices[b]
            d1, d2 = pv - pa, pb - pv
            n1, n2 = np.hypot(*d1), np.hypot(*d2)
            cosang = float(np.dot(d1, d2) / (n1 * n2))
            if cosang < math.cos(math.radians(1.0)):
                continue
            newlen = float(np.hypot(*(pb - pa)))
            if (n1 + n2) - newlen > 1e-9:
                continue
            out.remove_edge(e1)
            out.remove_edge(e2)
            out.remove_vertex(vid)
            out.add_edge(a, b, lab[0], lab[1])
            consumed[e1] = consumed[e2] = newlen
            rescan = rescan or newlen < l_min
        changed = rescan
    return out.compact()
