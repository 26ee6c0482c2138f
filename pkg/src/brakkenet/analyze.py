"""Local regularity analysis of partition networks.

Tools to answer "what does the network look like near this point":

* ``classify_junction`` — branch geometry at a vertex: straight passage,
  balanced 120-degree triple, unit-density lines crossing at 60-degree
  multiples, tangential contact along a shared axis, or unstable,
* ``tangent_cone`` — half-line-with-multiplicity fit of local support samples
  across a ladder of radii, stable only if every radius agrees,
* ``graph_decomposition`` — writes the network inside a ball as nu ordered
  sheets over an axis after checking the flatness hypotheses; failures raise
  ``AnalysisError`` naming the violated inequality,
* per-sheet slope-variation (Holder-1/2) and weak-second-derivative checks,
* ``density_check`` — lower/upper mass-ratio bounds on support balls.

All analysis is pure: it reads immutable network snapshots and never mutates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .varifold import mass_in_ball


class AnalysisError(ValueError):
    """A regularity hypothesis failed; the message names the inequality."""


# -- junction classification --------------------------------------------


@dataclass(frozen=True)
class JunctionClassification:
    vertex: int
    kind: str
    angles: tuple  # branch directions in degrees, ccw sorted
    separations: tuple  # consecutive ccw gaps, degrees (sum 360)
    tangent_sum: tuple  # raw sum of outward unit tangents, never thresholded
    k_R: int | None = None  # branch counts about the fitted axis, when one exists
    k_L: int | None = None


def _branch_chain(net, v, first_edge, window):
    """Vertex chain walking outward from v through degree-2 vertices."""
    inc = net.incidence()
    pts = [net.vertices[v]]
    cur, ei = v, first_edge
    for _ in range(window):
        a, b, _, _ = net.edges[ei]
        nxt = b if a == cur else a
        pts.append(net.vertices[nxt])
        ids = [e for e in inc.get(nxt, ()) if e != ei]
        if len(ids) != 1:
            break
        cur, ei = nxt, ids[0]
    return np.array(pts)


def _branch_direction(chain):
    # least-squares line through the chain, oriented away from the vertex
    d = chain[1:] - chain[0]
    C = d.T @ d
    _, vecs = np.linalg.eigh(C)
    u = vecs[:, -1]
    if np.dot(u, d[0]) < 0:
        u = -u
    return u


def _line_clusters(angles_deg, tol):
    """Group branch angles by direction modulo 180; returns list of
    (axis_deg, [branch indices])."""
    reps = []
    for i, a in enumerate(angles_deg):
        la = a % 180.0
        for rep in reps:
            d = abs(la - rep[0]) % 180.0
            if min(d, 180.0 - d) <= tol:
                rep[1].append(i)
                break
        else:
            reps.append([la, [i]])
    return [(r[0], r[1]) for r in reps]


def classify_junction(net, v, angle_tol=5.0, window=3):
    """Classify the local branch pattern at vertex v.

    Kinds: regular_point (straight passage), triple_120, sixty_crossing
    (full unit lines meeting at 60-degree multiples), tangential_contact
    (several branches sharing one axis with balanced left/right counts),
    degenerate_junction (60-family geometry without a clean line structure),
    unstable (everything else, e.g. a 90-degree cross).
    """
    inc = net.incidence()
    ids = inc.get(v, ())
    if len(ids) < 2:
        raise AnalysisError(f"endpoint: vertex {v} has degree {len(ids)}")
    chains = [_branch_chain(net, v, ei, window) for ei in ids]
    dirs = np.array([_branch_direction(c) for c in chains])
    ang = np.degrees(np.arctan2(dirs[:, 1], dirs[:, 0])) % 360.0
    order = np.argsort(ang)
    ang = ang[order]
    dirs = dirs[order]
    seps = (np.roll(ang, -1) - ang) % 360.0
    tsum = dirs.sum(axis=0)
    n = len(ids)

    result = lambda kind, kr=None, kl=None: JunctionClassification(
        v,
        kind,
        tuple(float(a) for a in ang),
        tuple(float(s) for s in seps),
        (float(tsum[0]), float(tsum[1])),
        kr,
        kl,
    )

    if n == 2 and all(abs(s - 180.0) <= angle_tol for s in seps):
        return result("regular_point")
    if n == 3 and np.all(np.abs(seps - 120.0) <= angle_tol):
        return result("triple_120")

    # the sixty-degree family: every pairwise direction difference a multiple
    # of 60 modulo a half-turn, and outward tangents summing to zero
    pair_ok = True
    for i in range(n):
        for k in range(i + 1, n):
            d = (ang[k] - ang[i]) % 180.0
            if min(abs(d - m) for m in (0.0, 60.0, 120.0, 180.0)) > angle_tol:
                pair_ok = False
    balanced = float(np.hypot(*tsum)) <= n * math.sin(math.radians(angle_tol))
    if not (pair_ok and balanced):
        return result("unstable")

    clusters = _line_clusters(ang, angle_tol)
    if len(clusters) == 1:
        # everything shares one axis: count branches on each side
        axis_deg, members = clusters[0]
        axis = np.array([math.cos(math.radians(axis_deg)), math.sin(math.radians(axis_deg))])
        k_r = int(sum(1 for i in members if np.dot(dirs[i], axis) > 0))
        k_l = len(members) - k_r
        kind = "tangential_contact" if k_r == k_l else "degenerate_junction"
        return result(kind, k_r, k_l)
    if all(len(members) == 2 for _, members in clusters):
        # full unit-density lines through the vertex at 60-degree multiples
        return result("sixty_crossing")
    return result("degenerate_junction")


# -- tangent cones -------------------------------------------------------


@dataclass(frozen=True)
class ConeFit:
    label: str
    half_lines: tuple  # ((angle_deg, multiplicity), ...) sorted by angle
    residual: float  # scale-free Hausdorff mismatch + mass mismatch
    stable: bool


def _cluster_directions(theta, w, merge_deg):
    """Cyclically merge weighted angles closer than merge_deg; returns list of
    (mean_angle, mass)."""
    order = np.argsort(theta)
    th = theta[order]
    ww = w[order]
    # break the circle at the largest gap so no cluster wraps
    gaps = (np.roll(th, -1) - th) % 360.0
    start = (int(np.argmax(gaps)) + 1) % len(th)
    th = np.roll(th, -start)
    ww = np.roll(ww, -start)
    # after the roll at most one descent remains; unwrap past it
    th = th + 360.0 * np.concatenate([[0], np.cumsum(np.diff(th) < 0)])
    clusters = []
    cur = [0]
    for i in range(1, len(th)):
        if th[i] - th[cur[-1]] <= merge_deg:
            cur.append(i)
        else:
            clusters.append(cur)
            cur = [i]
    clusters.append(cur)
    out = []
    for c in clusters:
        mass = float(ww[c].sum())
        mean = float(np.average(th[c], weights=ww[c])) % 360.0
        out.append((mean, mass))
    return out


def _cone_mismatch(d, rr, w, lines, r):
    """Scale-free fit residual inside radius r: two-sided Hausdorff distance
    between the samples and the half-line cone (over r), plus the relative
    mass mismatch against sum(mult) * r."""
    take = rr <= r
    if not np.any(take):
        return math.inf
    P = d[take]
    radii = rr[take]
    angs = np.array([math.radians(a) for a, _ in lines])
    U = np.column_stack([np.cos(angs), np.sin(angs)])  # one row per half-line
    # distance from each sample to each half-line {t*u : 0 <= t <= r}
    t = np.clip(P @ U.T, 0.0, r)  # (npts, nlines)
    diff = P[:, None, :] - t[:, :, None] * U[None, :, :]
    dist_pl = np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=1)
    d_sup = float(dist_pl.max())
    # and from probe points along each half-line to the nearest sample
    s = np.linspace(0.1, 1.0, 10) * r
    probes = (U[:, None, :] * s[None, :, None]).reshape(-1, 2)
    d_cover = float(
        np.max(np.min(np.hypot(*(probes[:, None, :] - P[None, :, :]).T), axis=0))
    )
    mass = float(w[take].sum())
    cone_mass = sum(m for _, m in lines) * r
    return (max(d_sup, d_cover) + abs(mass - cone_mass)) / r


def tangent_cone(points, weights, center, radii, merge_deg=10.0):
    """Half-line cone fit of weighted support samples around a center.

    Samples within each radius of the (decreasing, >= 3 entries) ladder are
    clustered by direction; cluster mass over the radius gives the integer
    multiplicity of each half-line, ties rounding down.  The fit is stable
    only when every radius sees the same pattern; unstable fits are labeled
    "other" with the residual still reported.
    """
    radii = sorted(radii, reverse=True)
    if len(radii) < 3:
        raise ValueError("need at least 3 radii for a stability verdict")
    P = np.asarray(points, dtype=float)
    w = np.asarray(weights, dtype=float)
    c = np.asarray(center, dtype=float)
    d = P - c
    rr = np.hypot(d[:, 0], d[:, 1])
    fits = []
    for r in radii:
        take = (rr <= r) & (rr > 1e-9 * max(radii))
        if w[take].sum() <= 0:
            fits.append(())
            continue
        theta = np.degrees(np.arctan2(d[take, 1], d[take, 0])) % 360.0
        clusters = _cluster_directions(theta, w[take], merge_deg)
        lines = []
        for angle, mass in clusters:
            mult = int(math.floor(mass / r + 0.5 - 1e-9))  # ties toward lower
            if mult >= 1:
                lines.append((angle, mult))
        fits.append(tuple(lines))
    base = fits[-1]  # smallest radius: the most local picture
    residual = _cone_mismatch(d, rr, w, base, radii[-1]) if base else math.inf
    stable = all(_cone_patterns_match(base, other, merge_deg) for other in fits[:-1])
    label = _cone_label(base, merge_deg) if stable else "other"
    return ConeFit(label, base, float(residual), bool(stable))


def _cone_patterns_match(a, b, tol):
    if len(a) != len(b):
        return False
    if not a:
        return True
    mults_a = [m for _, m in a]
    angs_a = [t for t, _ in a]
    for shift in range(len(b)):
        rb = b[shift:] + b[:shift]
        if mults_a != [m for _, m in rb]:
            continue
        if all(min(abs(x - y), 360 - abs(x - y)) <= tol for x, (y, _) in zip(angs_a, rb)):
            return True
    return False


def _cone_label(lines, tol):
    if not lines:
        return "empty"
    seps = [(lines[(k + 1) % len(lines)][0] - lines[k][0]) % 360.0 for k in range(len(lines))]
    mults = [m for _, m in lines]
    if len(lines) == 2 and all(m == 1 for m in mults) and abs(seps[0] - 180.0) <= tol:
        return "line"
    if len(lines) == 3 and all(m == 1 for m in mults) and all(abs(s - 120.0) <= tol for s in seps):
        return "triple_junction"
    if (
        len(lines) == 4
        and all(m == 1 for m in mults)
        and sorted(round(s / 60.0) for s in seps) == [1, 1, 2, 2]
        and all(abs(s - 60.0 * round(s / 60.0)) <= tol for s in seps)
    ):
        return "two_lines_60"
    if len(lines) == 6 and all(m == 1 for m in mults) and all(abs(s - 60.0) <= tol for s in seps):
        return "three_lines_60"
    return "other"


# -- graph decomposition -------------------------------------------------


@dataclass
class Sheet:
    x: np.ndarray  # uniform grid over [-r, r]
    y: np.ndarray  # sampled heights, constant beyond the true span
    span: tuple  # x-interval actually covered by the chain
    length: float  # true chain length inside the ball
    energy: float  # discrete second-difference energy over the true span

    def slopes(self):
        return np.diff(self.y) / np.diff(self.x)

    def mean_height(self):
        return float(self.y.mean())


@dataclass
class GraphPatch:
    axis: tuple
    window: tuple  # (center, half-width r, height c7*r)
    nu: int
    sheets: list
    w22_estimates: list = field(default_factory=list)

    @property
    def center(self):
        return self.window[0]

    @property
    def radius(self):
        return self.window[1]

    @property
    def mass(self):
        return sum(s.length for s in self.sheets)


def _clip_chains(net, c, r, ex, ey):
    """Edge pieces inside B(c, r) in axis coordinates, glued into chains.
    Returns list of (n, 2) arrays ordered along each chain."""
    segs = []
    for ei, (u, v, _, _) in net.live_edges():
        a = net.vertices[u] - c
        b = net.vertices[v] - c
        pa = np.array([np.dot(a, ex), np.dot(a, ey)])
        pb = np.array([np.dot(b, ex), np.dot(b, ey)])
        d = pb - pa
        qa = float(np.dot(d, d))
        if qa == 0:
            continue
        qb = 2.0 * float(np.dot(pa, d))
        qc = float(np.dot(pa, pa)) - r * r
        disc = qb * qb - 4 * qa * qc
        if disc <= 0:
            continue
        t0 = (-qb - math.sqrt(disc)) / (2 * qa)
        t1 = (-qb + math.sqrt(disc)) / (2 * qa)
        t0, t1 = max(0.0, t0), min(1.0, t1)
        if t1 - t0 <= 1e-12:
            continue
        segs.append((pa + t0 * d, pa + t1 * d))
    chains = [[s[0], s[1]] for s in segs]
    changed = True
    while changed:
        changed = False
        for i in range(len(chains)):
            if chains[i] is None:
                continue
            for k in range(i + 1, len(chains)):
                if chains[k] is None:
                    continue
                a, b = chains[i], chains[k]
                tol = 1e-9 * max(1.0, r)
                if np.hypot(*(a[-1] - b[0])) < tol:
                    chains[i] = a + b[1:]
                elif np.hypot(*(a[-1] - b[-1])) < tol:
                    chains[i] = a + b[-2::-1]
                elif np.hypot(*(a[0] - b[-1])) < tol:
                    chains[i] = b + a[1:]
                elif np.hypot(*(a[0] - b[0])) < tol:
                    chains[i] = b[::-1] + a[1:]
                else:
                    continue
                chains[k] = None
                changed = True
                break
    return [np.array(ch) for ch in chains if ch is not None]


def _uniform_energy(x, y, valid):
    """Discrete second-difference energy sum((d2f/dx^2)^2 dx) over interior
    grid nodes whose full stencil lies in the valid span."""
    dx = x[1] - x[0]
    d2 = (y[2:] - 2.0 * y[1:-1] + y[:-2]) / (dx * dx)
    use = valid[2:] & valid[1:-1] & valid[:-2]
    return float(np.sum(d2[use] ** 2) * dx)


def graph_decomposition(net, a, r, nu_hint=None, axis=(1.0, 0.0), c6=0.1, c7=0.15, grid_n=129):
    """Decompose the network inside B(a, r) into nu ordered sheets over axis.

    Hypotheses checked first, in order: no junction in the window ("not
    flat"), heights within c7*r ("H2"), monotone chains with bending energy
    times r at most c6 ("H1"), then the mass window pins nu and the chain
    count, sheet lengths, and ordering must all agree.  Raises AnalysisError
    naming the violated inequality; nu_hint only cross-checks the deduced nu.
    """
    c = np.asarray(a, dtype=float)
    ex = np.asarray(axis, dtype=float)
    ex = ex / np.hypot(*ex)
    ey = np.array([-ex[1], ex[0]])
    r = float(r)

    inc = net.incidence()
    for v in net.live_vertex_ids():
        if len(inc.get(v, ())) >= 3 and np.hypot(*(net.vertices[v] - c)) < r:
            raise AnalysisError(
                f"not flat: junction of degree {len(inc[v])} at vertex {v} inside B(a, {r:g})"
            )

    chains = _clip_chains(net, c, r, ex, ey)
    if not chains:
        raise AnalysisError(f"empty window: no support inside B(a, {r:g})")

    worst_y = max(float(np.max(np.abs(ch[:, 1]))) for ch in chains)
    if worst_y > c7 * r:
        raise AnalysisError(
            f"H2: height sup|y| = {worst_y:.4g} exceeds c7*r = {c7 * r:.4g}"
        )

    grid = np.linspace(-r, r, grid_n)
    prepared = []
    energy = 0.0
    for ch in chains:
        dxs = np.diff(ch[:, 0])
        if np.all(dxs > 0):
            pass
        elif np.all(dxs < 0):
            ch = ch[::-1]
        else:
            flip = ch[np.argmin(np.abs(dxs)), 0]
            raise AnalysisError(
                f"graph property: a chain is not monotone over the axis near x = {flip:.4g}"
            )
        span = (float(ch[0, 0]), float(ch[-1, 0]))
        f = np.interp(grid, ch[:, 0], ch[:, 1])  # constant beyond the span
        valid = (grid >= span[0] - 1e-12) & (grid <= span[1] + 1e-12)
        e = _uniform_energy(grid, f, valid)
        length = float(np.sum(np.hypot(*np.diff(ch, axis=0).T)))
        energy += e
        prepared.append(Sheet(grid.copy(), f, span, length, e))
    if energy * r > c6:
        raise AnalysisError(
            f"H1: bending energy {energy:.4g} exceeds c6/r = {c6 / r:.4g}"
        )

    V = net.to_varifold()
    m_full = mass_in_ball(V, c, r)
    m_half = mass_in_ball(V, c, r / 2.0)
    nu = int(round(m_half / r))
    if nu < 1:
        raise AnalysisError(
            f"mass window: m_half = {m_half:.4g} supports no sheet over radius {r:g}"
        )
    if m_half < r * (nu - 0.5):
        raise AnalysisError(
            f"mass window: m_half = {m_half:.4g} below r*(nu-1/2) = {r * (nu - 0.5):.4g}"
        )
    if m_full > 2 * r * (nu + 0.5):
        raise AnalysisError(
            f"mass window: m_full = {m_full:.4g} above 2r*(nu+1/2) = {2 * r * (nu + 0.5):.4g}"
        )
    if nu_hint is not None and int(nu_hint) != nu:
        raise AnalysisError(f"mass window: deduced nu = {nu} disagrees with nu_hint = {nu_hint}")
    if len(prepared) != nu:
        raise AnalysisError(
            f"sheet count: found {len(prepared)} monotone chains, mass window gives nu = {nu}"
        )

    min_span = r * math.sqrt(1.0 - c7 * c7)
    for s in prepared:
        if s.span[0] > -min_span + 1e-6 * r or s.span[1] < min_span - 1e-6 * r:
            raise AnalysisError(
                f"spanning: sheet covers [{s.span[0]:.4g}, {s.span[1]:.4g}], "
                f"window needs [{-min_span:.4g}, {min_span:.4g}]"
            )
    prepared.sort(key=lambda s: s.mean_height())
    Y = np.array([s.y for s in prepared])
    if np.any(np.diff(Y, axis=0) < -1e-9 * max(1.0, r)):
        bad = int(np.argwhere(np.diff(Y, axis=0) < -1e-9 * max(1.0, r))[0][1])
        raise AnalysisError(f"sheet ordering: sheets cross near x = {grid[bad]:.4g}")
    total_len = sum(s.length for s in prepared)
    if abs(total_len - m_full) > 1e-3 * max(m_full, 1e-12):
        raise AnalysisError(
            f"mass bookkeeping: sheet lengths {total_len:.6g} != ball mass {m_full:.6g}"
        )
    return GraphPatch(
        tuple(ex), (tuple(c), r, c7 * r), nu, prepared, [s.energy for s in prepared]
    )


# -- per-sheet inequality checks ----------------------------------------


def _sheet_slope_table(sheet):
    """Midpoints, slopes, and validity (stencil within the true span)."""
    x, y = sheet.x, sheet.y
    xm = 0.5 * (x[:-1] + x[1:])
    s = np.diff(y) / np.diff(x)
    valid = (x[:-1] >= sheet.span[0] - 1e-12) & (x[1:] <= sheet.span[1] + 1e-12)
    return xm[valid], s[valid]


def slope_variation_check(sheet, energy, c8=1.0, eps_slack=0.0):
    """Holder-1/2 slope bound over all sample pairs.

    Checks |f'(x) - f'(x~)| <= c8 * (eps_slack + sqrt(energy) *
    sqrt(|x - x~| + eps_slack)) for every pair of slope samples; returns the
    verdict, the tightest pair, and the worst margin (rhs - lhs)."""
    xm, s = _sheet_slope_table(sheet)
    if len(s) < 2:
        return {"ok": True, "worst_pair": None, "margin": math.inf}
    dxp = np.abs(xm[:, None] - xm[None, :])
    lhs = np.abs(s[:, None] - s[None, :])
    rhs = c8 * (eps_slack + math.sqrt(max(energy, 0.0)) * np.sqrt(dxp + eps_slack))
    margin = rhs - lhs
    np.fill_diagonal(margin, math.inf)
    flat = int(np.argmin(margin))
    i, k = divmod(flat, margin.shape[1])
    return {
        "ok": bool(margin[i, k] >= 0.0),
        "worst_pair": (float(xm[i]), float(xm[k])),
        "margin": float(margin[i, k]),
    }


def _bump_bank(lo, hi, count):
    """Deterministic compactly supported C2 bumps covering (lo, hi)."""
    bank = []
    span = hi - lo
    centers = np.linspace(lo + 0.2 * span, hi - 0.2 * span, (count + 1) // 2)
    for x0 in centers:
        for width in (0.18 * span, 0.3 * span):
            bank.append((float(x0), float(width)))
    return bank[:count]


def _bump_value(x, x0, width):
    u = (x - x0) / width
    out = np.zeros_like(x)
    live = np.abs(u) < 1.0
    out[live] = (1.0 - u[live] ** 2) ** 3
    return out


def w22_weak_derivative_check(sheet, energy_bound, r, n_bumps=20):
    """Weak-second-derivative bound for the normalized slope field.

    With g = f'/sqrt(1+f'^2) on grid intervals and phi sampled at interval
    midpoints, summation by parts gives sum (phi_{k+1}-phi_k) g_{k+1} =
    -sum (g_{k+1}-g_k) phi_k when phi vanishes at the end midpoints, and the
    claim is |that| <= sqrt(energy_bound / r * sum phi^2 sqrt(1+f'^2) dx) for
    a fixed bank of compactly supported C2 bumps.  Returns the verdict and
    per-bump ratios; an energy_bound below the sheet's true bending content
    makes it fail."""
    xm, s = _sheet_slope_table(sheet)
    results = []
    if len(s) >= 2:
        g = s / np.sqrt(1.0 + s * s)
        dx = float(sheet.x[1] - sheet.x[0])
        ds_w = np.sqrt(1.0 + s * s) * dx
        for x0, width in _bump_bank(xm[0], xm[-1], n_bumps):
            phi = _bump_value(xm, x0, width)
            if abs(phi[0]) > 1e-12 or abs(phi[-1]) > 1e-12:
                continue  # boundary terms would not vanish
            lhs = abs(float(np.sum(np.diff(phi) * g[1:])))
            rhs = math.sqrt(
                max(energy_bound, 0.0) / r * float(np.sum(phi**2 * ds_w))
            )
            ratio = lhs / rhs if rhs > 0 else (0.0 if lhs < 1e-12 else math.inf)
            results.append({"x0": x0, "width": width, "lhs": lhs, "rhs": rhs, "ratio": ratio})
    worst = max((q["ratio"] for q in results), default=0.0)
    return {"ok": worst <= 1.0, "worst_ratio": worst, "results": results}


# -- density bounds ------------------------------------------------------


def density_check(net, radii=(0.05, 0.1, 0.2), spacing=None):
    """Mass of support balls against the r/8 floor and the per-radius ceiling.

    Returns min/max observed ratios over support sample points; lower ratios
    are mass(B_r)/r (floor 1/8), upper ratios mass(B_r)/(2r)."""
    V = net.to_varifold()
    if spacing is None:
        spacing = min(radii) / 2.0
    pts, _ = net.sample_support(spacing)
    lo = math.inf
    hi = 0.0
    worst = None
    for r in radii:
        for z in pts:
            m = mass_in_ball(V, z, r)
            ratio = m / r
            if ratio < lo:
                lo = ratio
                worst = (tuple(z), r)
            hi = max(hi, m / (2.0 * r))
    return {
        "min_lower_ratio": lo,
        "ok_lower": lo >= 0.125 - 1e-9,
        "max_upper_ratio": hi,
        "worst": worst,
    }
