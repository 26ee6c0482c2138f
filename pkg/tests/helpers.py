"""Shared builders and independent quadrature oracles for the test suite.

Everything here deliberately avoids the library's own fast paths: masses are
checked against plain midpoint grids, convolutions against brute-force
stencils, so that a bug in the package cannot hide inside its own oracle.
"""

import numpy as np

from brakkenet.mollify import kernel_eval, smoothed_first_variation_many
from brakkenet.network import Network
from brakkenet.varifold import Varifold1, VectorField, first_variation_exact


def polygon_points(R, n, center=(0.0, 0.0), phase=0.0):
    th = phase + np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    return np.c_[center[0] + R * np.cos(th), center[1] + R * np.sin(th)]


def circle_varifold(R=1.0, n=720, center=(0.0, 0.0), phase=0.0):
    P = polygon_points(R, n, center, phase)
    return Varifold1.from_arrays(P, np.roll(P, -1, axis=0))


def segment_varifold(a, b, pieces=1, multiplicity=1):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    t = np.linspace(0.0, 1.0, pieces + 1)[:, None]
    P = a + t * (b - a)
    m = None if multiplicity == 1 else [multiplicity] * pieces
    return Varifold1.from_arrays(P[:-1], P[1:], m)


def spoke_varifold(angles_deg, r=1.0, center=(0.0, 0.0)):
    """Star of straight spokes from `center`, one segment per angle."""
    c = np.asarray(center, float)
    A = np.repeat(c[None, :], len(angles_deg), axis=0)
    th = np.radians(np.asarray(angles_deg, float))
    B = c + r * np.c_[np.cos(th), np.sin(th)]
    return Varifold1.from_arrays(A, B)


def chain_network(points, regions=2, labels=(1, 2), frozen_ends=True, box=None):
    """Open polyline with uniform side labels; ends frozen by default."""
    pts = [np.asarray(p, float) for p in points]
    L, R = labels
    edges = [(k, k + 1, L, R) for k in range(len(pts) - 1)]
    frozen = {0, len(pts) - 1} if frozen_ends else set()
    return Network(pts, edges, regions, frozen=frozen, box=box)


def support_sample(net, spacing):
    pts, _ = net.sample_support(spacing)
    return pts


def bump_field(center, rho, v0, M):
    """Compact C^1 field (v0 + M.(z-c)) * (1 - |z-c|^2/rho^2)_+^2."""
    c = np.asarray(center, float)
    v0 = np.asarray(v0, float)
    M = np.asarray(M, float)

    def ev(z):
        z = np.asarray(z, float)
        d = z - c
        u2 = np.sum(d * d, axis=-1) / rho**2
        b = np.where(u2 < 1.0, (1.0 - np.minimum(u2, 1.0)) ** 2, 0.0)
        base = v0 + np.einsum("...j,ij->...i", d, M)
        return base * b[..., None]

    return VectorField(ev, support_radius=rho, center=c)


def grid_pair_integral(V, K, g, h):
    """Midpoint-grid value of integral (kernel * deltaV)(z) . g(z) dz over supp g.

    Also returns the integral of the absolute integrand, the natural scale for
    a pairing whose signed parts may cancel."""
    c, rho = g.center, g.support_radius
    n = int(np.ceil(2 * rho / h))
    step = 2 * rho / n
    ax = c[0] - rho + (np.arange(n) + 0.5) * step
    ay = c[1] - rho + (np.arange(n) + 0.5) * step
    X, Y = np.meshgrid(ax, ay, indexing="ij")
    Z = np.stack([X.ravel(), Y.ravel()], axis=1)
    fv = smoothed_first_variation_many(V, K, Z)
    dots = np.einsum("ij,ij->i", fv, g.value(Z))
    return float(dots.sum() * step * step), float(np.abs(dots).sum() * step * step)


_CONV_STENCILS = {}


def mollified_field(K, g, h):
    """Brute-force kernel * g as a VectorField (stencil midpoint sum)."""
    key = (K.epsilon, round(h, 12))
    if key not in _CONV_STENCILS:
        n = int(np.ceil(K.effective_radius / h))
        ax = np.arange(-n, n + 1) * h
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        offs = np.stack([X.ravel(), Y.ravel()], axis=1)
        r = np.hypot(offs[:, 0], offs[:, 1])
        keep = r <= K.effective_radius
        w = kernel_eval(K, offs[keep]) * h * h
        _CONV_STENCILS[key] = (offs[keep], w)
    offs, w = _CONV_STENCILS[key]

    def ev(x):
        x = np.asarray(x, float)
        return np.einsum("k,kj->j", w, g.value(x[None, :] - offs))

    return VectorField(ev)


def duality_gap(V, K, g, h=None):
    """Relative gap between the two routes of the mollified pairing.

    Route 1 integrates (kernel * deltaV) . g on a grid; route 2 feeds the
    mollified field through the exact first variation.  The gap is measured
    against the size of the integrand (absolute-value integral), so cancelled
    pairings do not manufacture spurious relative error.  Returns (rel, lhs, rhs).
    """
    h = h or K.epsilon / 10.0
    lhs, absint = grid_pair_integral(V, K, g, h)
    rhs = first_variation_exact(V, mollified_field(K, g, h))
    denom = max(abs(lhs), abs(rhs), absint)
    rel = 0.0 if denom < 1e-12 else abs(lhs - rhs) / denom
    return rel, lhs, rhs


def random_bump_fields(rng, count, spread=0.4, rho_range=(0.35, 0.7)):
    out = []
    for _ in range(count):
        c = rng.uniform(-spread, spread, 2)
        rho = rng.uniform(*rho_range)
        out.append(bump_field(c, rho, rng.uniform(-1, 1, 2), rng.uniform(-1, 1, (2, 2))))
    return out


def kernel_grid_mass(K, n=400):
    """Independent Cartesian midpoint quadrature of the kernel over its support."""
    r = K.effective_radius
    h = 2 * r / n
    ax = -r + (np.arange(n) + 0.5) * h
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    Z = np.stack([X.ravel(), Y.ravel()], axis=1)
    return float(kernel_eval(K, Z).sum() * h * h)
