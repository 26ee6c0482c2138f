"""Mollified calculus: kernel normalization, smoothed fields, energy, duality."""

import numpy as np
import pytest

from brakkenet.mollify import (
    Kernel,
    Quadrature,
    curvature_energy,
    cutoff_profile,
    kernel_eval,
    smoothed_first_variation,
    smoothed_first_variation_many,
    smoothed_mass,
    smoothed_mean_curvature,
)
from brakkenet.varifold import Varifold1

from helpers import (
    circle_varifold,
    duality_gap,
    kernel_grid_mass,
    random_bump_fields,
    segment_varifold,
    spoke_varifold,
)

TWO_PI = 2.0 * np.pi


def test_cutoff_profile_shape():
    r = np.array([0.0, 0.3, 0.5, 0.75, 1.0, 2.0])
    v = cutoff_profile(r)
    assert v[0] == v[1] == v[2] == 1.0
    assert 0.0 < v[3] < 1.0
    assert v[4] == v[5] == 0.0


def test_kernel_construction_validation():
    with pytest.raises(ValueError):
        Kernel.make(0.0)
    with pytest.raises(ValueError):
        Quadrature(line_order=2)
    with pytest.raises(ValueError):
        Quadrature(truncation=3.0)
    with pytest.raises(ValueError):
        Quadrature(area_grid=0.9)


@pytest.mark.parametrize("eps", [0.1, 0.05, 0.02])
def test_kernel_unit_mass(eps):
    # independent Cartesian midpoint quadrature, not the polar normalizer
    K = Kernel.make(eps)
    assert abs(kernel_grid_mass(K) - 1.0) < 1e-6


def test_kernel_peak_support_and_symmetry():
    K = Kernel.make(0.05)
    assert kernel_eval(K, (0.0, 0.0)) == pytest.approx(1.0 / (TWO_PI * 0.05**2), rel=1e-4)
    assert kernel_eval(K, (1.2, 0.0)) == 0.0
    assert kernel_eval(K, (0.26, 0.0)) == 0.0  # beyond 5*eps truncation
    th = np.linspace(0, TWO_PI, 13)
    ring = 0.04 * np.c_[np.cos(th), np.sin(th)]
    vals = kernel_eval(K, ring)
    assert np.ptp(vals) < 1e-12


def test_smoothed_mass_on_a_line():
    K = Kernel.make(0.05)
    V = segment_varifold((-1, 0), (1, 0))
    # transverse Gaussian profile integrates to 1/(sqrt(2 pi) eps) on the axis
    assert smoothed_mass(V, K, (0.0, 0.0)) == pytest.approx(1.0 / (np.sqrt(TWO_PI) * 0.05), rel=1e-4)
    assert smoothed_mass(V, K, (0.0, 3.0)) == 0.0
    a = smoothed_mass(V, K, (0.2, 0.07))
    b = smoothed_mass(V, K, (0.2, -0.07))
    assert a == pytest.approx(b, rel=1e-12)


def test_smoothed_first_variation_interior_of_line_is_zero():
    K = Kernel.make(0.05)
    V = segment_varifold((-2, 0), (2, 0))
    # endpoint impulses sit beyond the effective radius
    np.testing.assert_allclose(smoothed_first_variation(V, K, (0.0, 0.0)), [0.0, 0.0], atol=1e-14)


def test_smoothed_first_variation_circle_is_radial():
    K = Kernel.make(0.05)
    V = circle_varifold(1.0, 720)
    z = np.array([1.0, 0.0])
    fv = smoothed_first_variation(V, K, z)
    sm = smoothed_mass(V, K, z)
    # outward magnitude ~ (1/R) * smoothed mass; tangential part ~ 0
    assert fv[0] == pytest.approx(sm, rel=0.05)
    assert abs(fv[1]) < 1e-6 * abs(fv[0]) + 1e-10


def test_smoothed_first_variation_balanced_star_vanishes():
    K = Kernel.make(0.05)
    V = spoke_varifold((90, 210, 330), r=1.0)
    Z = np.array([[0.0, 0.0], [0.05, 0.02], [-0.1, 0.06], [0.0, -0.12]])
    fv = smoothed_first_variation_many(V, K, Z)
    assert np.abs(fv).max() < 1e-13


def test_mean_curvature_straight_line_both_modes():
    K = Kernel.make(0.05)
    V = segment_varifold((-2, 0), (2, 0), pieces=17)
    for mode in ("pointwise", "full"):
        h = smoothed_mean_curvature(V, K, (0.1, 0.0), mode=mode)
        assert np.linalg.norm(h) < 1e-6
    with pytest.raises(ValueError):
        smoothed_mean_curvature(V, K, (0.0, 0.0), mode="bogus")


def _circle_h_error(eps, n=720, samples=16):
    K = Kernel.make(eps)
    V = circle_varifold(1.0, n)
    th = np.linspace(0, TWO_PI, samples, endpoint=False)
    worst = 0.0
    for t in th:
        z = np.array([np.cos(t), np.sin(t)])
        h = smoothed_mean_curvature(V, K, z, mode="pointwise")
        # target is the inward unit vector -z for R=1
        worst = max(worst, float(np.linalg.norm(h + z)))
    return worst


def test_mean_curvature_circle_converges_in_epsilon():
    errs = [_circle_h_error(e) for e in (0.1, 0.05, 0.025)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] < 0.10  # within 10 percent at eps = 0.05
    assert errs[2] < 0.005


def test_mean_curvature_full_mode_close_to_pointwise():
    K = Kernel.make(0.05)
    V = circle_varifold(1.0, 720)
    for t in (0.0, 1.1, 2.7):
        z = np.array([np.cos(t), np.sin(t)])
        hp = smoothed_mean_curvature(V, K, z, mode="pointwise")
        hf = smoothed_mean_curvature(V, K, z, mode="full")
        assert np.linalg.norm(hf - hp) <= 5 * K.epsilon


def test_curvature_energy_line_and_circle():
    K = Kernel.make(0.05)
    line = segment_varifold((-2, 0), (2, 0))
    assert curvature_energy(line, K, (-0.5, -0.5, 0.5, 0.5)) < 1e-6

    circ = circle_varifold(1.0, 720)
    e1 = curvature_energy(circ, K, (-1.5, -1.5, 1.5, 1.5))
    assert e1 == pytest.approx(TWO_PI, rel=0.20)
    assert e1 == pytest.approx(6.169613, rel=1e-3)  # regression pin

    with pytest.raises(ValueError):
        curvature_energy(circ, K, (1.0, 1.0, -1.0, -1.0))


def test_curvature_energy_scales_inversely_with_radius():
    K = Kernel.make(0.05)
    e1 = curvature_energy(circle_varifold(1.0, 720), K, (-1.5, -1.5, 1.5, 1.5))
    e2 = curvature_energy(circle_varifold(2.0, 1440), K, (-2.5, -2.5, 2.5, 2.5))
    assert e2 / e1 == pytest.approx(0.5, rel=0.10)


def test_curvature_energy_additive_over_split_window():
    K = Kernel.make(0.05)
    circ = circle_varifold(1.0, 360)
    whole = curvature_energy(circ, K, (-1.5, -1.5, 1.5, 1.5))
    lower = curvature_energy(circ, K, (-1.5, -1.5, 1.5, 0.0))
    upper = curvature_energy(circ, K, (-1.5, 0.0, 1.5, 1.5))
    assert lower + upper == pytest.approx(whole, rel=1e-9)


def test_translation_equivariance():
    K = Kernel.make(0.05)
    # spoke length chosen off the L/eps piece boundary so both copies tile alike
    V = spoke_varifold((10, 130, 250), r=0.79)
    shift = np.array([0.731, -0.402])
    A, B, m, _, _ = V.arrays
    Vs = Varifold1.from_arrays(A + shift, B + shift, m)
    for z in ([0.1, 0.05], [-0.2, 0.0], [0.0, 0.3]):
        z = np.asarray(z)
        assert smoothed_mass(V, K, z) == pytest.approx(smoothed_mass(Vs, K, z + shift), abs=1e-12)
        np.testing.assert_allclose(
            smoothed_first_variation(V, K, z),
            smoothed_first_variation(Vs, K, z + shift),
            atol=1e-12,
        )


def test_duality_of_smoothed_pairing():
    # integral of (kernel*deltaV).g  ==  deltaV(kernel*g), checked on two shapes
    K = Kernel.make(0.05)
    rng = np.random.default_rng(17)
    shapes = [spoke_varifold((90, 210, 330), r=0.8), circle_varifold(0.7, 360)]
    worst = 0.0
    for k, g in enumerate(random_bump_fields(rng, 6)):
        rel, _, _ = duality_gap(shapes[k % 2], K, g)
        worst = max(worst, rel)
    assert worst < 1e-4
