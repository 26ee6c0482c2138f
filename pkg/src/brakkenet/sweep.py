"""Length-reducing local deformations ("sweeps") on partition networks.

A sweep scans the network for locally suboptimal structure — phantom edges,
near-zero edges, small closed components, unbalanced triple junctions, and
junctions of degree >= 4 — and applies a catalog of local moves, each of which
strictly reduces total length.  Every move must pass an admissibility guard:

* sup displacement of the move at most 1/j^2,
* total region area swapped at most 1/j,
* mass does not increase against slowly-varying positive weights.  A move with
  region ball B(c, r) passes outright when its local mass ratio is below
  exp(-2jr) (a weight of gradient bound j varies by at most that factor over
  the ball, which makes the monotonicity automatic); otherwise a finite bank
  of decay wells is tested numerically.

Moves are applied greedily by descending saving, with disjoint move balls per
sweep; rejected candidates are reported, never forced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .network import Network, validate, region_area_changes, _face_trace
from .testfns import AjWell, segments_line_integral
from .varifold import ball_clipped_length, mass_in_ball


class StaleMove(Exception):
    """Raised when an earlier move invalidated this candidate's vertices."""


@dataclass
class Move:
    kind: str
    center: np.ndarray
    radius: float
    saving: float
    displacement: float
    area_swap: float | None  # None: compute from global region areas
    apply: callable
    order_key: int = 0


@dataclass(frozen=True)
class MoveRecord:
    kind: str
    center: tuple
    radius: float
    saving: float
    displacement: float
    area_swapped: float


@dataclass
class DeficitReport:
    mass_before: float
    mass_after: float
    moves: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)

    @property
    def deficit(self):
        """Length removed by this sweep (never positive)."""
        return self.mass_after - self.mass_before


# -- geometric optimizers ------------------------------------------------


def fermat_point(points, tol=1e-12, max_iter=256):
    """Point minimizing the sum of distances to the given points (Weiszfeld)."""
    P = np.asarray(points, dtype=float)
    scale = max(1e-30, float(np.ptp(P)))
    x = P.mean(axis=0)
    for _ in range(max_iter):
        d = np.hypot(*(P - x).T)
        hit = np.flatnonzero(d < 1e-14 * scale)
        if hit.size:
            # iterate landed on an input point: it is optimal iff the pull of
            # the remaining points does not exceed unit strength
            k = hit[0]
            rest = np.delete(np.arange(len(P)), k)
            dr = np.hypot(*(P[rest] - x).T)
            pull = np.sum((P[rest] - x) / dr[:, None], axis=0)
            if np.hypot(*pull) <= 1.0 + 1e-12:
                return x
            x = x + (1e-9 * scale) * pull / np.hypot(*pull)
            continue
        w = 1.0 / d
        xn = (P * w[:, None]).sum(axis=0) / w.sum()
        if np.hypot(*(xn - x)) < tol * scale:
            return xn
        x = xn
    return x


def steiner_pair(group_a, group_b, tol=1e-12, max_iter=200):
    """Two connected branch points for a split: s1 joins group_a, s2 joins
    group_b, with an edge s1-s2.  Returns (s1, s2, total_length)."""
    A = np.asarray(group_a, dtype=float)
    B = np.asarray(group_b, dtype=float)
    s1 = np.vstack([A, B.mean(axis=0, keepdims=True)]).mean(axis=0)
    s2 = np.vstack([B, A.mean(axis=0, keepdims=True)]).mean(axis=0)
    scale = max(1e-30, float(np.ptp(np.vstack([A, B]))))
    for _ in range(max_iter):
        s1n = fermat_point(np.vstack([A, s2[None, :]]))
        s2n = fermat_point(np.vstack([B, s1n[None, :]]))
        shift = max(np.hypot(*(s1n - s1)), np.hypot(*(s2n - s2)))
        s1, s2 = s1n, s2n
        if shift < tol * scale:
            break
    total = (
        np.hypot(*(A - s1).T).sum()
        + np.hypot(*(B - s2).T).sum()
        + np.hypot(*(s1 - s2))
    )
    return s1, s2, float(total)


def _tri_area(a, b, c):
    return 0.5 * abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))


# -- admissibility -------------------------------------------------------


class AdmissibilityGuard:
    """Checks a proposed deformation against the strength-j move budget."""

    def __init__(self, j, probes=()):
        if j <= 0:
            raise ValueError("deformation strength j must be positive")
        self.j = float(j)
        self.max_displacement = 1.0 / j**2
        self.max_area_swap = 1.0 / j
        self.well_probes = [p for p in probes if isinstance(p, AjWell)]

    def check(self, before, after, move, area_swap, before_vf=None, total_before=None, changed=None):
        reasons = []
        if move.displacement > self.max_displacement + 1e-12:
            reasons.append(
                f"displacement {move.displacement:.4g} exceeds {self.max_displacement:.4g}"
            )
        if area_swap > self.max_area_swap + 1e-12:
            reasons.append(f"area swap {area_swap:.4g} exceeds {self.max_area_swap:.4g}")
        if not reasons and not self._mass_monotone(
            before, after, move, before_vf=before_vf, total_before=total_before, changed=changed
        ):
            reasons.append("mass-monotonicity probe failed")
        return (not reasons), reasons

    def _mass_monotone(self, before, after, move, before_vf=None, total_before=None, changed=None):
        # the move edits only the segments in `changed`; everything else is
        # common to both networks and cancels from every before/after
        # comparison, so all integrals run over the changed sets only
        if changed is None:
            changed = _changed_segments(_net_rows(before), after)
        (Ab, Bb), (Aa, Ba) = changed
        if before_vf is None:
            before_vf = before.to_varifold() if before.live_edges() else None
        local_before = (
            mass_in_ball(before_vf, move.center, move.radius) if before_vf is not None else 0.0
        )
        local_after = (
            local_before
            - ball_clipped_length(Ab, Bb, move.center, move.radius)
            + ball_clipped_length(Aa, Ba, move.center, move.radius)
        )
        if local_after <= 1e-12:
            return True  # pure removal
        if local_after <= local_before * math.exp(-2.0 * self.j * move.radius) + 1e-12:
            return True
        offs = np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1]]) * move.radius
        wells = [AjWell.for_strength(move.center + o, self.j) for o in offs]
        wells += self.well_probes
        total = before.total_length() if total_before is None else total_before
        tol = 1e-10 * (1.0 + total)
        for w in wells:
            gain = segments_line_integral(Aa, Ba, w.value) - segments_line_integral(Ab, Bb, w.value)
            if gain > tol:
                return False
        return True


def _net_rows(net):
    """Edge id -> (endpoint array, endpoint array) for live edges."""
    return {ei: (net.vertices[u], net.vertices[v]) for ei, (u, v, _, _) in net.live_edges()}


def _changed_segments(rows_before, after):
    """Segments present in only one of the nets, as ((Ab, Bb), (Aa, Ba)).

    Relies on Network.copy sharing vertex arrays: an untouched edge keeps the
    same id and the same two array objects, so identity comparison suffices.
    Rebound-but-equal vertices merely land in both changed sets, where their
    contributions cancel.
    """
    delB, delA = [], []
    seen = set()
    for ei, (u, v, _, _) in after.live_edges():
        pa, pb = after.vertices[u], after.vertices[v]
        prev = rows_before.get(ei)
        seen.add(ei)
        if prev is not None and prev[0] is pa and prev[1] is pb:
            continue
        if prev is not None:
            delB.append(prev)
        delA.append((pa, pb))
    for ei, prev in rows_before.items():
        if ei not in seen:
            delB.append(prev)

    def _stack(rows):
        if not rows:
            z = np.zeros((0, 2))
            return z, z
        return np.array([r[0] for r in rows]), np.array([r[1] for r in rows])

    return _stack(delB), _stack(delA)


# -- move generators -----------------------------------------------------


def _oriented_labels(edge, tail):
    u, v, L, R = edge
    return (L, R) if u == tail else (R, L)


def _phantom_moves(net):
    moves = []
    for ei, (u, v, L, R) in net.live_edges():
        if L != R:
            continue
        a, b = net.vertices[u], net.vertices[v]
        length = float(np.hypot(*(b - a)))

        def apply(n, ei=ei, u=u, v=v):
            if n.edges[ei] is None:
                raise StaleMove
            n.remove_edge(ei)
            inc = n.incidence()
            for w in (u, v):
                if not inc.get(w):
                    n.remove_vertex(w)
            return n

        moves.append(
            Move("delete_phantom", 0.5 * (a + b), 0.5 * length, length, 0.0, 0.0, apply, ei)
        )
    return moves


def _collapse_moves(net, r_def, inc=None):
    delta = r_def / 100.0
    live = net.live_edges()
    if not live:
        return []
    A = np.array([net.vertices[e[0]] for _, e in live])
    B = np.array([net.vertices[e[1]] for _, e in live])
    lens = np.hypot(*(B - A).T)
    short = [ei for (ei, _), ln in zip(live, lens) if ln < delta]
    if not short:
        return []
    inc = inc if inc is not None else net.incidence()
    moves = []
    for ei in short:
        u, v, L, R = net.edges[ei]
        if u in net.frozen and v in net.frozen:
            continue
        pu, pv = net.vertices[u], net.vertices[v]
        if u in net.frozen:
            keep = pu
        elif v in net.frozen:
            keep = pv
        elif len(inc[u]) != len(inc[v]):
            keep = pu if len(inc[u]) > len(inc[v]) else pv
        else:
            keep = 0.5 * (pu + pv)
        cand = _apply_collapse(net.copy(), ei, u, v, keep)
        if cand is None:
            continue
        saving = net.total_length() - cand.total_length()
        if saving <= 0:
            continue
        nbr_pts = [
            net.vertices[net.edges[e2][0] if net.edges[e2][1] in (u, v) else net.edges[e2][1]]
            for w in (u, v)
            for e2 in inc[w]
            if e2 != ei
        ]
        radius = max([np.hypot(*(p - keep)) for p in nbr_pts] + [net.edge_length(ei)])
        # swept area: each reattached edge sweeps the triangle (old end, keep, other end)
        swap = 0.0
        for w in (u, v):
            for e2 in inc[w]:
                if e2 == ei:
                    continue
                a2, b2, _, _ = net.edges[e2]
                other = b2 if a2 == w else a2
                swap += _tri_area(net.vertices[w], keep, net.vertices[other])
        disp = max(np.hypot(*(keep - pu)), np.hypot(*(keep - pv)))

        def apply(n, ei=ei, u=u, v=v, keep=keep):
            out = _apply_collapse(n, ei, u, v, keep)
            if out is None:
                raise StaleMove
            return out

        moves.append(Move("collapse_edge", keep.copy(), float(radius), saving, float(disp), swap, apply, ei))
    return moves


def _apply_collapse(net, ei, u, v, keep):
    """Merge v into u at position keep; returns None if labels obstruct."""
    if net.edges[ei] is None or net.vertices[u] is None or net.vertices[v] is None:
        return None
    net.remove_edge(ei)
    net.vertices[u] = np.asarray(keep, dtype=float)
    if v in net.frozen:
        net.frozen.add(u)
    for e2, (a, b, L, R) in net.live_edges():
        if a == v or b == v:
            na, nb = (u if a == v else a), (u if b == v else b)
            net.edges[e2] = (na, nb, L, R)
    net.remove_vertex(v)
    # reconcile parallel edges created by a shared neighbor
    by_pair = {}
    for e2, (a, b, L, R) in net.live_edges():
        key = (min(a, b), max(a, b))
        if key in by_pair:
            e1 = by_pair[key]
            a1, b1, L1, R1 = net.edges[e1]
            # orient both a->b
            if a1 != min(a1, b1):
                a1, b1, L1, R1 = b1, a1, R1, L1
            a2, b2, L2, R2 = a, b, L, R
            if a2 != min(a2, b2):
                a2, b2, L2, R2 = b2, a2, R2, L2
            if R1 == L2:
                merged = (a1, b1, L1, R2)
            elif R2 == L1:
                merged = (a1, b1, L2, R1)
            else:
                return None
            net.remove_edge(e1)
            net.remove_edge(e2)
            if merged[2] != merged[3]:
                by_pair[key] = net.add_edge(*merged)
            else:
                del by_pair[key]  # the pair enclosed a vanished sliver
        else:
            by_pair[key] = e2
    return net


def _components(net):
    live = net.live_edges()
    if not live:
        return []
    E = np.array([(u, v) for _, (u, v, _, _) in live])
    nv = int(E.max()) + 1
    graph = coo_matrix(
        (np.ones(len(E)), (E[:, 0], E[:, 1])), shape=(nv, nv)
    )
    _, labels = connected_components(graph, directed=False)
    comps = {}
    for (i, _), lab in zip(live, labels[E[:, 0]]):
        comps.setdefault(int(lab), []).append(i)
    return list(comps.values())


def _point_in_poly(p, poly):
    x, y = p
    inside = False
    n = len(poly)
    for k in range(n):
        x1, y1 = poly[k]
        x2, y2 = poly[(k + 1) % n]
        if (y1 > y) != (y2 > y):
            if x1 + (y - y1) / (y2 - y1) * (x2 - x1) > x:
                inside = not inside
    return inside


def _retract_moves(net, r_def):
    moves = []
    all_live = set(net.live_vertex_ids())
    for edge_ids in _components(net):
        vids = set()
        for ei in edge_ids:
            u, v, _, _ = net.edges[ei]
            vids.update((u, v))
        if vids & net.frozen:
            continue
        deg = {w: 0 for w in vids}
        for ei in edge_ids:
            u, v, _, _ = net.edges[ei]
            deg[u] += 1
            deg[v] += 1
        if min(deg.values()) < 2:
            continue  # not closed
        P = np.array([net.vertices[w] for w in vids])
        span = P.max(axis=0) - P.min(axis=0)
        if float(max(span)) >= r_def:
            continue  # bbox side bounds the diameter from below
        diam = float(np.max(np.hypot(*(P[:, None, :] - P[None, :, :]).transpose(2, 0, 1))))
        if diam >= r_def:
            continue
        faces = _component_faces(net, edge_ids)
        pos_faces = [f for f in faces if f["area"] > 0]
        if not pos_faces:
            continue
        polys = [f["poly"] for f in pos_faces]
        foreign = all_live - vids
        if any(_point_in_poly(net.vertices[w], poly) for w in foreign for poly in polys):
            continue  # something is nested inside; not a free-standing shrinker
        center = P.mean(axis=0)
        area = sum(f["area"] for f in pos_faces)
        length = sum(net.edge_length(ei) for ei in edge_ids)

        def apply(n, edge_ids=tuple(edge_ids), vids=frozenset(vids)):
            for ei in edge_ids:
                if n.edges[ei] is None:
                    raise StaleMove
                n.remove_edge(ei)
            for w in vids:
                n.remove_vertex(w)
            return n

        moves.append(
            Move("retract_component", center, 0.5 * diam, length, 0.5 * diam, area, apply, min(edge_ids))
        )
    return moves


def _component_faces(net, edge_ids):
    points = {}
    halfedges = []
    for ei in edge_ids:
        u, v, L, R = net.edges[ei]
        points[u] = net.vertices[u]
        points[v] = net.vertices[v]
        halfedges.append((u, v, L))
        halfedges.append((v, u, R))
    outgoing = {}
    for he_i, (u, v, _) in enumerate(halfedges):
        d = points[v] - points[u]
        outgoing.setdefault(u, []).append((math.atan2(d[1], d[0]), he_i))
    for u in outgoing:
        outgoing[u].sort()
    faces = _face_trace(points, halfedges, outgoing)
    for f in faces:
        f["poly"] = [tuple(points[halfedges[c][0]]) for c in f["halfedges"]]
    return faces


def _fermat_moves(net, j, r_def, inc=None):
    inc = inc if inc is not None else net.incidence()
    moves = []
    for v in sorted(inc):
        if v in net.frozen or len(inc[v]) != 3:
            continue
        pv = net.vertices[v]
        nbrs = []
        for ei in inc[v]:
            a, b, _, _ = net.edges[ei]
            nbrs.append(b if a == v else a)
        P = np.array([net.vertices[w] for w in nbrs])
        spoke = np.hypot(*(P - pv).T)
        target = fermat_point(P)
        step = target - pv
        dist = float(np.hypot(*step))
        cap = min(0.5 / j**2, r_def / 4.0, 0.45 * float(spoke.min()))
        if dist > cap:
            # partial step toward the minimizer still shortens (convex objective)
            target = pv + step * (cap / dist)
            dist = cap
        saving = float(spoke.sum() - np.hypot(*(P - target).T).sum())
        if saving <= 1e-10:
            continue
        radius = float(np.hypot(*(P - target).T).max() + dist)
        swap = sum(_tri_area(pv, target, p) for p in P)

        def apply(n, v=v, target=target):
            if n.vertices[v] is None:
                raise StaleMove
            n.vertices[v] = target.copy()
            return n

        moves.append(Move("balance_junction", pv.copy(), radius, saving, dist, swap, apply, v))
    return moves


def _sharp_angle_audit(net, inc=None, tol_deg=1.0):
    """Junctions whose smallest pairwise edge angle is below 60 deg - tol.

    A wide-angle pair is always length-reducible in principle; when a sweep
    leaves such a junction behind anyway, the report says so rather than
    silently under-delivering.
    """
    inc = inc if inc is not None else net.incidence()
    out = []
    limit = 60.0 - tol_deg
    for v in sorted(inc):
        if v in net.frozen or len(inc[v]) < 3:
            continue
        ths = []
        for ei in inc[v]:
            d = net.outgoing_dir(ei, v)
            ths.append(math.degrees(math.atan2(d[1], d[0])))
        ths.sort()
        gaps = [b - a for a, b in zip(ths, ths[1:])] + [360.0 - (ths[-1] - ths[0])]
        worst = min(gaps)
        if worst < limit:
            out.append(
                {
                    "kind": "sharp_angle",
                    "center": tuple(net.vertices[v]),
                    "reason": f"pairwise angle {worst:.2f} deg < 60",
                }
            )
    return out


def _split_moves(net, inc=None):
    """Split a degree >= 4 vertex into two branch points joined by an edge.

    The neighbors are regrouped into an adjacent pair plus the rest, and the
    pair of new vertices is placed by Fermat-point optimization over the
    actual neighbor positions, so on a raw star the single move already lands
    the Steiner-optimal tree.  Degree >= 5 vertices shed one pair per sweep.
    """
    inc = inc if inc is not None else net.incidence()
    moves = []
    for v in sorted(inc):
        if v in net.frozen or len(inc[v]) < 4:
            continue
        pv = net.vertices[v]
        spokes = []
        for ei in inc[v]:
            a, b, _, _ = net.edges[ei]
            n = b if a == v else a
            L, R = _oriented_labels(net.edges[ei], v)
            d = net.outgoing_dir(ei, v)
            spokes.append((math.atan2(d[1], d[0]), ei, n, L, R, d))
        spokes.sort()
        deg = len(spokes)
        P = np.array([net.vertices[s[2]] for s in spokes])
        star = float(np.hypot(*(P - pv).T).sum())

        best = None
        seen = set()
        for i0 in range(deg):
            g1 = (i0, (i0 + 1) % deg)
            g2 = tuple(k % deg for k in range(i0 + 2, i0 + deg))
            key = frozenset((frozenset(g1), frozenset(g2)))
            if key in seen:
                continue
            seen.add(key)
            s1p, s2p, tree = steiner_pair(P[list(g1)], P[list(g2)])
            if np.hypot(*(s1p - s2p)) < max(1e-9, 1e-6 * star):
                continue  # branch points coincide; the star is already optimal
            # symmetric stars (e.g. the 90-degree cross) produce pairings that
            # tie up to float noise; compare on a rounded key so the winner is
            # the lowest incident edge id, not whichever direction of the loop
            # accumulated less roundoff
            tie = min(spokes[k][1] for k in g1)
            cand = (round(tree, 9), tie, i0)
            if best is None or cand < best[0]:
                best = (cand, tree, s1p, s2p, i0, g1, g2)
        if best is None:
            continue
        _, tree, s1_pos, s2_pos, i0, g1, g2 = best
        saving = star - tree
        if saving <= max(1e-12, 1e-9 * star):
            continue
        if float(min(np.hypot(*(P - s1_pos).T).min(), np.hypot(*(P - s2_pos).T).min())) < 1e-9:
            continue  # a branch point landed on a neighbor; collapse territory
        disp = float(max(np.hypot(*(s1_pos - pv)), np.hypot(*(s2_pos - pv)), 1e-12))
        radius = float(np.hypot(*(P - pv).T).max())
        wedge = [s[3] for s in spokes]  # ccw label of spoke k
        mid_L = wedge[(i0 - 1) % deg]
        mid_R = wedge[(i0 + 1) % deg]
        plan = [(s[1], s[2], s[3], s[4]) for s in spokes]

        def apply(n, v=v, plan=tuple(plan), s1_pos=s1_pos.copy(), s2_pos=s2_pos.copy(),
                  g1=g1, g2=g2, mid_L=mid_L, mid_R=mid_R):
            if n.vertices[v] is None:
                raise StaleMove
            for ei, _, _, _ in plan:
                if n.edges[ei] is None:
                    raise StaleMove
            s1 = n.add_vertex(s1_pos)
            s2 = n.add_vertex(s2_pos)
            for k, (ei, nbr, L, R) in enumerate(plan):
                n.remove_edge(ei)
                n.add_edge(s1 if k in g1 else s2, nbr, L, R)
            n.add_edge(s1, s2, mid_L, mid_R)
            n.remove_vertex(v)
            return n

        moves.append(
            Move("split_junction", pv.copy(), radius, saving, disp, None, apply, min(p[0] for p in plan))
        )
    return moves


# -- the sweep -----------------------------------------------------------


def deformation_sweep(net, j, r_def, l_min, l_max, probes=(), max_moves=64):
    """One greedy pass of admissible length-reducing moves.

    Returns (new_network, DeficitReport).  The report's moves carry exact
    per-move bookkeeping; candidates rejected by the guard or by structural
    validation end up in report.unresolved with the reason.
    """
    guard = AdmissibilityGuard(j, probes)
    inc = net.incidence()
    unresolved = []
    cands = (
        _phantom_moves(net)
        + _collapse_moves(net, r_def, inc=inc)
        + _retract_moves(net, r_def)
        + _fermat_moves(net, j, r_def, inc=inc)
        + _split_moves(net, inc=inc)
    )
    mass_before = net.total_length()
    if not cands:
        # nothing to try: hand the caller the same network object
        return net, DeficitReport(mass_before, mass_before, [], unresolved + _sharp_angle_audit(net, inc=inc))
    cands.sort(key=lambda m: (-m.saving, m.kind, m.order_key))
    work = net.copy()
    base_viol = set(validate(work))
    applied = []
    claimed = []
    work_rows = work_vf = None  # per-work-state tables, built on first use
    work_mass = mass_before
    for mv in cands[:max_moves]:
        if any(
            np.hypot(*(mv.center - c)) < mv.radius + r + l_max for c, r in claimed
        ):
            continue  # overlaps an applied move; retry next sweep
        try:
            cand = mv.apply(work.copy())
        except StaleMove:
            continue
        new_viol = set(validate(cand)) - base_viol
        if new_viol:
            unresolved.append(
                {"kind": mv.kind, "center": tuple(mv.center), "reason": "; ".join(sorted(new_viol))}
            )
            continue
        if mv.area_swap is not None:
            swap = mv.area_swap
        else:
            try:
                swap = 0.5 * sum(abs(d) for d in region_area_changes(work, cand).values())
            except ValueError as err:
                unresolved.append({"kind": mv.kind, "center": tuple(mv.center), "reason": str(err)})
                continue
        if work_rows is None:
            work_rows = _net_rows(work)
            work_vf = work.to_varifold() if work.live_edges() else None
        ok, reasons = guard.check(
            work, cand, mv, swap,
            before_vf=work_vf, total_before=work_mass,
            changed=_changed_segments(work_rows, cand),
        )
        if not ok:
            unresolved.append({"kind": mv.kind, "center": tuple(mv.center), "reason": "; ".join(reasons)})
            continue
        work = cand
        work_rows = work_vf = None
        work_mass = work.total_length()
        applied.append(
            MoveRecord(mv.kind, tuple(mv.center), mv.radius, mv.saving, mv.displacement, swap)
        )
        claimed.append((mv.center, mv.radius))
    if not applied:
        return net, DeficitReport(mass_before, mass_before, [], unresolved + _sharp_angle_audit(net, inc=inc))
    mass_after = work.total_length()
    out = work.compact()
    return out, DeficitReport(mass_before, mass_after, applied, unresolved + _sharp_angle_audit(out))
