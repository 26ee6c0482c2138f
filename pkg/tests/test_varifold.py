"""Exact varifold layer: clipped masses, first variation, defects, distances."""

import numpy as np
import pytest

from brakkenet.network import junction_defect
from brakkenet.varifold import (
    Segment,
    Varifold1,
    VectorField,
    ball_clipped_length,
    density_ratio,
    first_variation_exact,
    hausdorff_distance,
    mass_in_ball,
    point,
    varifold_from_points,
)

from helpers import bump_field, chain_network, circle_varifold, segment_varifold, spoke_varifold


def test_point_rejects_non_finite():
    with pytest.raises(ValueError):
        point(np.inf, 0.0)


def test_segment_validation():
    s = Segment(point(0, 0), point(3, 4))
    assert s.length == 5.0
    np.testing.assert_allclose(s.tangent, [0.6, 0.8])
    with pytest.raises(ValueError):
        Segment(point(1, 1), point(1, 1))
    with pytest.raises(ValueError):
        Segment(point(0, 0), point(1, 0), multiplicity=0)
    with pytest.raises(ValueError):
        Varifold1([])


def test_from_arrays_matches_segment_constructor():
    A = np.array([[0.0, 0.0], [1.0, 0.0]])
    B = np.array([[1.0, 0.0], [1.0, 2.0]])
    V1 = Varifold1.from_arrays(A, B, [2, 1])
    V2 = varifold_from_points(np.stack([A, B], axis=1), [2, 1])
    assert V1.total_mass() == V2.total_mass() == 2.0 * 1.0 + 2.0
    with pytest.raises(ValueError):
        Varifold1.from_arrays(A, A)  # zero length
    with pytest.raises(ValueError):
        Varifold1.from_arrays(A, B, [0.5, 1])


def test_mass_in_ball_segment_through_center():
    V = segment_varifold((-2, 0), (2, 0))
    assert mass_in_ball(V, (0, 0), 1.0) == pytest.approx(2.0, abs=1e-14)
    with pytest.raises(ValueError):
        mass_in_ball(V, (0, 0), 0.0)


def test_mass_in_ball_triple_junction():
    V = spoke_varifold((90, 210, 330), r=1.0)
    # three unit spokes, half of each inside B_1/2
    assert mass_in_ball(V, (0, 0), 0.5) == pytest.approx(1.5, abs=1e-14)
    assert density_ratio(V, (0, 0), 0.5) == pytest.approx(1.5, abs=1e-13)


def test_mass_in_ball_disjoint_is_zero():
    V = segment_varifold((5, 5), (6, 5))
    assert mass_in_ball(V, (0, 0), 1.0) == 0.0
    assert density_ratio(V, (0, 0), 1.0) == 0.0


def test_clipping_against_dense_sampling():
    rng = np.random.default_rng(11)
    A = rng.uniform(-1, 1, (40, 2))
    B = rng.uniform(-1, 1, (40, 2))
    mult = rng.integers(1, 4, 40)
    V = Varifold1.from_arrays(A, B, mult)
    for center, r in [((0.0, 0.0), 0.6), ((0.3, -0.2), 0.45), ((-0.8, 0.8), 0.3)]:
        exact = mass_in_ball(V, center, r)
        # brute force: 4000 sample points per segment
        t = (np.arange(4000) + 0.5) / 4000
        P = A[:, None, :] + t[None, :, None] * (B - A)[:, None, :]
        d = np.hypot(P[..., 0] - center[0], P[..., 1] - center[1])
        L = np.hypot(*(B - A).T)
        approx = float(np.sum((d <= r).mean(axis=1) * L * mult))
        assert exact == pytest.approx(approx, abs=2e-3)


def test_clipped_length_weights_and_scaling():
    A = np.array([[-1.0, 0.0]])
    B = np.array([[1.0, 0.0]])
    assert ball_clipped_length(A, B, (0, 0), 0.5, weights=np.array([3.0])) == pytest.approx(3.0)
    # dilation by lam scales clipped mass by lam
    V = spoke_varifold((10, 130, 250), r=1.0)
    lam = 2.5
    A2, B2, m, _, _ = V.arrays
    V2 = Varifold1.from_arrays(lam * A2, lam * B2, m)
    assert mass_in_ball(V2, (0, 0), lam * 0.4) == pytest.approx(lam * mass_in_ball(V, (0, 0), 0.4), rel=1e-13)


def test_density_ratio_line_and_cone():
    V = segment_varifold((-3, 0), (3, 0), pieces=7)
    for r in (0.1, 0.5, 1.0):
        assert density_ratio(V, (0.2, 0.0), r) == pytest.approx(1.0, abs=1e-13)
    # m unit-multiplicity spokes have density m/2 at the apex, any radius inside
    star = spoke_varifold((0, 72, 144, 216, 288), r=1.0)
    for r in (0.05, 0.2, 0.5, 0.8, 0.99):
        assert density_ratio(star, (0, 0), r) == pytest.approx(2.5, abs=1e-12)


def test_first_variation_identity_field_gives_mass():
    # g(z) = z has tangential divergence 1, so deltaV(g) equals total mass
    g = VectorField(lambda z: np.asarray(z, float))
    for V in (circle_varifold(1.0, 64), spoke_varifold((20, 140, 260)), segment_varifold((0, 0), (2, 1), pieces=5)):
        assert first_variation_exact(V, g) == pytest.approx(V.total_mass(), rel=1e-12)


def test_first_variation_vanishing_field_on_straight_chain():
    V = segment_varifold((-1, 0), (1, 0), pieces=9)
    g = bump_field((0.1, 0.0), 0.6, (0.3, -0.7), [[0.2, 0.1], [-0.4, 0.5]])
    # support stays away from the chain ends; straight pieces telescope to zero
    assert abs(first_variation_exact(V, g)) < 1e-13


def test_first_variation_balanced_triple_is_zero():
    V = spoke_varifold((90, 210, 330), r=1.0)
    rng = np.random.default_rng(3)
    for _ in range(8):
        g = bump_field(rng.uniform(-0.2, 0.2, 2), 0.5, rng.uniform(-1, 1, 2), rng.uniform(-1, 1, (2, 2)))
        assert abs(first_variation_exact(V, g)) < 1e-13


def test_first_variation_linearity_and_refinement():
    V = spoke_varifold((15, 100, 230), r=0.9)
    g1 = bump_field((0.05, -0.1), 0.5, (1.0, 0.2), np.zeros((2, 2)))
    g2 = bump_field((-0.1, 0.1), 0.4, (-0.3, 0.8), [[0.1, 0.0], [0.0, -0.2]])
    combo = VectorField(lambda z: 2.0 * g1.value(z) - 3.0 * g2.value(z))
    lhs = first_variation_exact(V, combo)
    rhs = 2.0 * first_variation_exact(V, g1) - 3.0 * first_variation_exact(V, g2)
    assert lhs == pytest.approx(rhs, abs=1e-13)

    # collinear subdivision leaves the telescoped sum unchanged
    A, B, m, _, _ = V.arrays
    t = np.linspace(0, 1, 6)
    Af = np.vstack([A + s * (B - A) for s in t[:-1]])
    Bf = np.vstack([A + s * (B - A) for s in t[1:]])
    Vf = Varifold1.from_arrays(Af, Bf, np.tile(m, 5))
    assert first_variation_exact(Vf, g1) == pytest.approx(first_variation_exact(V, g1), abs=1e-12)


def test_junction_defect_examples():
    net = chain_network([(-1, 0), (0, 0), (1, 0)])
    assert np.linalg.norm(junction_defect(net, 1)) < 1e-15

    bent = chain_network([(-1, 0), (0, 0), (0, 1)])
    d = junction_defect(bent, 1)
    np.testing.assert_allclose(d, [-1.0, 1.0], atol=1e-15)

    tri = spoke_varifold((90, 210, 330))
    A, B, _, _, _ = tri.arrays
    verts = [np.array([0.0, 0.0])] + [b for b in B]
    edges = [(0, k + 1, 1, 2) for k in range(3)]
    from brakkenet.network import Network

    trin = Network(verts, edges, 2, frozen={1, 2, 3})
    assert np.linalg.norm(junction_defect(trin, 0)) < 1e-14

    with pytest.raises(ValueError):
        junction_defect(chain_network([(0, 0), (1, 0)]), 5)


def test_defect_zero_iff_local_first_variation_zero():
    # balanced star: every compactly supported field away from the tips pairs to zero;
    # unbalanced star: a bump at the apex picks up the defect vector
    bal = spoke_varifold((90, 210, 330))
    unbal = spoke_varifold((0, 90, 180))
    rng = np.random.default_rng(5)
    hit = 0.0
    for _ in range(10):
        g = bump_field(rng.uniform(-0.1, 0.1, 2), 0.4, rng.uniform(-1, 1, 2), rng.uniform(-1, 1, (2, 2)))
        assert abs(first_variation_exact(bal, g)) < 1e-13
        hit = max(hit, abs(first_variation_exact(unbal, g)))
    assert hit > 1e-3


def test_hausdorff_distance():
    P = np.array([[0.0, 0.0], [1.0, 0.0]])
    assert hausdorff_distance(P, P) == 0.0
    assert hausdorff_distance([[0.0, 0.0]], [[1.0, 0.0]]) == 1.0
    t = np.linspace(0, 1, 401)
    base = np.c_[t, np.zeros_like(t)]
    lifted = np.c_[t, 0.1 * np.ones_like(t)]
    assert hausdorff_distance(base, lifted) == pytest.approx(0.1, abs=1e-12)
    with pytest.raises(ValueError):
        hausdorff_distance(np.empty((0, 2)), P)


def test_line_nodes_integrate_to_mass():
    V = circle_varifold(0.8, 48)
    pts, w = V.line_nodes(0.05)
    assert w.sum() == pytest.approx(V.total_mass(), rel=1e-12)
    # cached: same object back
    pts2, w2 = V.line_nodes(0.05)
    assert pts2 is pts and w2 is w


def test_endpoint_impulses_cancel_per_segment():
    V = spoke_varifold((30, 150, 270), r=1.2)
    pts, w = V.endpoint_impulses()
    np.testing.assert_allclose(w.sum(axis=0), [0.0, 0.0], atol=1e-15)
    assert pts.shape == (6, 2)
