"""Mollified varifold calculus: truncated-Gaussian kernel, smoothed mass,
smoothed first variation, smoothed mean curvature, and curvature energy.

The kernel is a radial Gaussian of width epsilon multiplied by a C-infinity
cutoff (identically 1 inside radius 1/2, identically 0 outside radius 1) and
truncated at ``truncation * epsilon``; the normalization constant is chosen so
the truncated product integrates to exactly 1 over the plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

TWO_PI = 2.0 * np.pi


def cutoff_profile(r):
    """Radial C-infinity bump: 1 for r <= 1/2, 0 for r >= 1, exp-glue between."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    out[r <= 0.5] = 1.0
    mid = (r > 0.5) & (r < 1.0)
    if np.any(mid):
        s = (r[mid] - 0.5) * 2.0  # transition coordinate in (0,1)
        with np.errstate(over="ignore"):
            f1 = np.exp(-1.0 / s)
            f2 = np.exp(-1.0 / (1.0 - s))
        out[mid] = f2 / (f1 + f2)
    return out


@dataclass(frozen=True)
class Quadrature:
    """Quadrature knobs: line nodes per epsilon of length, area-grid spacing as
    a fraction of epsilon, and the radius (in epsilons) beyond which the kernel
    is treated as zero."""

    line_order: int = 6
    area_grid: float = 0.25
    truncation: float = 5.0

    def __post_init__(self):
        if self.line_order < 4:
            raise ValueError(f"line_order must be >= 4, got {self.line_order}")
        if self.truncation < 5.0:
            raise ValueError(f"truncation must be >= 5, got {self.truncation}")
        if not 0 < self.area_grid <= 0.5:
            raise ValueError(f"area_grid must be in (0, 0.5], got {self.area_grid}")


@dataclass(frozen=True)
class Kernel:
    """Normalized, truncated, cut-off Gaussian mollifier at scale epsilon."""

    epsilon: float
    c_eps: float
    effective_radius: float
    quad: Quadrature

    @classmethod
    def make(cls, epsilon, quad=None):
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        quad = quad or Quadrature()
        r_eff = min(1.0, quad.truncation * epsilon)

        def radial(r):
            return cutoff_profile(r) * (r / epsilon**2) * np.exp(-r * r / (2 * epsilon**2))

        # integral of the unnormalized kernel over the plane, in polar form;
        # split at the cutoff shoulder so quad sees smooth pieces
        pieces = sorted({0.0, min(0.5, r_eff), r_eff})
        total = 0.0
        for lo, hi in zip(pieces[:-1], pieces[1:]):
            if hi > lo:
                val, _ = integrate.quad(radial, lo, hi, limit=200, epsabs=1e-14, epsrel=1e-12)
                total += val
        return cls(float(epsilon), 1.0 / total, float(r_eff), quad)

    def grid_spacing(self):
        return self.quad.area_grid * self.epsilon

    def slack(self):
        """Additive per-step inequality slack epsilon^(1/8)."""
        return self.epsilon**0.125


def kernel_eval(K, z):
    """Kernel value at displacement(s) z; accepts (2,) or (...,2) arrays."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    r = np.hypot(z[..., 0], z[..., 1])
    vals = _kernel_radial(K, r)
    return float(vals) if single else vals


def _kernel_radial(K, r):
    r = np.asarray(r, dtype=float)
    shape = r.shape
    flat = np.atleast_1d(r).ravel()
    vals = np.zeros_like(flat)
    live = flat <= K.effective_radius
    if np.any(live):
        rl = flat[live]
        v = K.c_eps / (TWO_PI * K.epsilon**2) * np.exp(-rl * rl / (2 * K.epsilon**2))
        vals[live] = v * cutoff_profile(rl)
    return vals.reshape(shape)


def _chunked(n, size=2048):
    for lo in range(0, n, size):
        yield lo, min(n, lo + size)


def _source_filter(pts, Zc, r_eff):
    """Mask of source points within r_eff of the chunk's bounding box."""
    lo = Zc.min(axis=0) - r_eff
    hi = Zc.max(axis=0) + r_eff
    return np.all((pts >= lo) & (pts <= hi), axis=1)


def smoothed_mass_many(V, K, Z):
    """(kernel * ||V||) at each row of Z, by composite Gauss line quadrature."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    pts, w = V.line_nodes(K.epsilon, K.quad.line_order)
    out = np.empty(len(Z))
    for lo, hi in _chunked(len(Z), 512):
        keep = _source_filter(pts, Z[lo:hi], K.effective_radius)
        if not np.any(keep):
            out[lo:hi] = 0.0
            continue
        d = Z[lo:hi, None, :] - pts[None, keep, :]
        r = np.hypot(d[..., 0], d[..., 1])
        out[lo:hi] = _kernel_radial(K, r) @ w[keep]
    return out


def smoothed_mass(V, K, z):
    return float(smoothed_mass_many(V, K, np.asarray(z, float))[0])


def smoothed_first_variation_many(V, K, Z):
    """(kernel * delta V) at each row of Z, via exact endpoint impulses."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    pts, w = V.endpoint_impulses()
    out = np.empty((len(Z), 2))
    for lo, hi in _chunked(len(Z), 512):
        keep = _source_filter(pts, Z[lo:hi], K.effective_radius)
        if not np.any(keep):
            out[lo:hi] = 0.0
            continue
        d = pts[None, keep, :] - Z[lo:hi, None, :]
        r = np.hypot(d[..., 0], d[..., 1])
        out[lo:hi] = _kernel_radial(K, r) @ w[keep]
    return out


def smoothed_first_variation(V, K, z):
    return smoothed_first_variation_many(V, K, np.asarray(z, float))[0]


def _ratio_many(V, K, Z):
    """Smoothed first variation over (smoothed mass + epsilon), rowwise."""
    sm = smoothed_mass_many(V, K, Z)
    fv = smoothed_first_variation_many(V, K, Z)
    return fv / (sm + K.epsilon)[:, None]


def smoothed_mean_curvature(V, K, z, mode="pointwise"):
    """Mollified mean curvature vector at z.

    pointwise: -(kernel*deltaV)(z) / ((kernel*||V||)(z) + epsilon).
    full: additionally convolves that ratio field with the kernel, on a local
    grid of spacing area_grid*epsilon truncated at the effective radius.
    """
    z = np.asarray(z, dtype=float)
    if mode == "pointwise":
        return -_ratio_many(V, K, z[None, :])[0]
    if mode != "full":
        raise ValueError(f"unknown mode {mode!r}")
    offs, phi_w = _outer_stencil(K)
    ratio = _ratio_many(V, K, z[None, :] + offs)
    return -(phi_w[:, None] * ratio).sum(axis=0)


_STENCILS = {}


def _outer_stencil(K):
    """Offset grid and kernel weights (incl. cell area) for the outer convolution."""
    key = (K.epsilon, K.c_eps, K.quad.area_grid, K.quad.truncation)
    hit = _STENCILS.get(key)
    if hit is not None:
        return hit
    h = K.grid_spacing()
    n = int(np.ceil(K.effective_radius / h))
    ax = (np.arange(-n, n + 1)) * h
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    offs = np.stack([X.ravel(), Y.ravel()], axis=1)
    r = np.hypot(offs[:, 0], offs[:, 1])
    keep = r <= K.effective_radius
    offs = offs[keep]
    phi_w = _kernel_radial(K, r[keep]) * h * h
    _STENCILS[key] = (offs, phi_w)
    return offs, phi_w


def _window_cells(V, K, window):
    """Midpoint-rule cell centers of the window grid, restricted to cells within
    the kernel's effective radius of the varifold's support."""
    x0, y0, x1, y1 = window
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"degenerate window {window}")
    h = K.grid_spacing()
    nx = max(1, int(np.ceil((x1 - x0) / h)))
    ny = max(1, int(np.ceil((y1 - y0) / h)))
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny
    cx = x0 + (np.arange(nx) + 0.5) * hx
    cy = y0 + (np.arange(ny) + 0.5) * hy
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    cells = np.stack([X.ravel(), Y.ravel()], axis=1)
    keep = _near_support_mask(V, cells, K.effective_radius + max(hx, hy))
    cells = cells[keep]
    # order by spatial tile so source prefiltering sees compact chunks
    tile = np.floor(cells / max(K.effective_radius, h)).astype(np.int64)
    order = np.lexsort((tile[:, 1], tile[:, 0]))
    return cells[order], hx * hy


def _near_support_mask(V, P, radius):
    # midpoint KD-tree query with half-length slack: a superset of the exact
    # within-radius set, which is all the skip logic needs (far cells are 0)
    A, B, _, L, _ = V.arrays
    mids = 0.5 * (A + B)
    slack = 0.5 * float(L.max())
    d, _ = cKDTree(mids).query(P, k=1)
    return d <= radius + slack


def curvature_energy(V, K, window):
    """Integral over the window of |kernel*deltaV|^2 / (kernel*||V|| + epsilon).

    Midpoint rule on an area_grid*epsilon grid; cells farther than the
    effective radius from the support contribute exactly zero and are skipped.
    """
    cells, cell_area = _window_cells(V, K, window)
    if len(cells) == 0:
        return 0.0
    sm = smoothed_mass_many(V, K, cells)
    fv = smoothed_first_variation_many(V, K, cells)
    dens = np.einsum("ij,ij->i", fv, fv) / (sm + K.epsilon)
    return float(dens.sum() * cell_area)
