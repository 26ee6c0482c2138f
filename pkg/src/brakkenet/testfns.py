"""Smooth probe functions for admissibility and inequality-residual checks.

Two families:

* ``AjWell`` — strictly positive wells ``A * exp(-lam * sqrt(1 + |z-a|^2))``.
  With ``lam + lam^2 <= j`` they satisfy the gradient (``|grad| <= j*phi``) and
  Hessian (``|D2| <= j*phi``) growth bounds that the deformation guard's mass
  monotonicity is stated against, so they make honest probes for it.
* ``CompactBump`` — C^2 compactly supported bumps ``A * (1 - u^2)^3`` with
  ``u = |z-a|/rho``, used where a test function must vanish outside a window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def well_rate(j):
    """Largest decay rate lam with lam + lam^2 = j."""
    if j <= 0:
        raise ValueError("j must be positive")
    return 0.5 * (math.sqrt(1.0 + 4.0 * j) - 1.0)


@dataclass(frozen=True)
class AjWell:
    center: tuple
    lam: float
    amplitude: float = 1.0

    @classmethod
    def for_strength(cls, center, j, amplitude=1.0):
        return cls(tuple(float(c) for c in center), well_rate(j), float(amplitude))

    def value(self, Z):
        Z = np.asarray(Z, dtype=float)
        d = Z - np.asarray(self.center)
        u = np.sqrt(1.0 + np.sum(d * d, axis=-1))
        return self.amplitude * np.exp(-self.lam * u)

    def grad(self, Z):
        Z = np.asarray(Z, dtype=float)
        d = Z - np.asarray(self.center)
        u = np.sqrt(1.0 + np.sum(d * d, axis=-1))
        phi = self.amplitude * np.exp(-self.lam * u)
        return (-self.lam * phi / u)[..., None] * d


@dataclass(frozen=True)
class CompactBump:
    center: tuple
    radius: float
    amplitude: float = 1.0

    def value(self, Z):
        Z = np.asarray(Z, dtype=float)
        d = Z - np.asarray(self.center)
        u2 = np.sum(d * d, axis=-1) / self.radius**2
        out = np.zeros(u2.shape)
        live = u2 < 1.0
        out[live] = self.amplitude * (1.0 - u2[live]) ** 3
        return out

    def grad(self, Z):
        Z = np.asarray(Z, dtype=float)
        d = Z - np.asarray(self.center)
        u2 = np.sum(d * d, axis=-1) / self.radius**2
        coef = np.zeros(u2.shape)
        live = u2 < 1.0
        coef[live] = -6.0 * self.amplitude * (1.0 - u2[live]) ** 2 / self.radius**2
        return coef[..., None] * d


def probe_bank(box, j, size, seed=2026):
    """Deterministic mixed bank of wells and bumps covering the box.

    Even indices are wells (guard probes), odd indices compact bumps
    (inequality probes); both orders interleave so any prefix is mixed.
    """
    x0, y0, x1, y1 = box
    diag = math.hypot(x1 - x0, y1 - y0)
    rng = np.random.default_rng(seed)
    bank = []
    for k in range(size):
        c = (rng.uniform(x0, x1), rng.uniform(y0, y1))
        if k % 2 == 0:
            bank.append(AjWell.for_strength(c, j))
        else:
            rho = diag * rng.uniform(0.25, 0.6)
            bank.append(CompactBump(c, rho))
    return bank


# quadrature nodes/weights reused for every straight edge
_GL_X, _GL_W = np.polynomial.legendre.leggauss(6)
_GL_T = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


def segments_line_integral(A, B, fn):
    """Integral of a scalar function over raw segments A[k]->B[k] (6-pt Gauss
    per segment; exact enough for smooth probes on remeshed edge lengths)."""
    if len(A) == 0:
        return 0.0
    P = A[:, None, :] + _GL_T[None, :, None] * (B - A)[:, None, :]
    L = np.hypot(*(B - A).T)
    vals = fn(P.reshape(-1, 2)).reshape(len(A), 6)
    return float(np.sum(vals * _GL_W[None, :] * L[:, None]))


def network_line_integral(net, fn):
    """Integral of a scalar function over the network's edges."""
    live = net.live_edges()
    if not live:
        return 0.0
    A = np.array([net.vertices[e[0]] for _, e in live])
    B = np.array([net.vertices[e[1]] for _, e in live])
    return segments_line_integral(A, B, fn)
