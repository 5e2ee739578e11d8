import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nodalscope.errors import CoverRadiusError, EmbeddedBallError
from nodalscope.geometry import (
    TorusModel,
    ball_volume,
    generate_cover,
    geodesic_distance,
    overlap_multiplicity,
    wrap_point,
)


def test_model_validation():
    with pytest.raises(ValueError):
        TorusModel(4)
    assert TorusModel(2).injectivity_radius == 0.5


def test_distance_examples(t2):
    assert geodesic_distance((0, 0), (0, 0), t2) == 0.0
    assert geodesic_distance((0, 0), (0.9, 0), t2) == pytest.approx(0.1)
    assert geodesic_distance((0, 0), (0.5, 0.5), t2) == pytest.approx(
        math.sqrt(0.5)
    )


def test_distance_symmetry_exact(t2):
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = rng.random(2), rng.random(2)
        assert geodesic_distance(a, b, t2) == geodesic_distance(b, a, t2)


def _sq_dist_rational(a, b):
    total = Fraction(0)
    for x, y in zip(a, b):
        d = abs(x - y)
        d = min(d, 1 - d)
        total += d * d
    return total


rational = st.fractions(min_value=0, max_value=1, max_denominator=64)


@given(st.tuples(rational, rational), st.tuples(rational, rational),
       st.tuples(rational, rational))
@settings(max_examples=200, deadline=None)
def test_triangle_inequality_exact_rationals(a, b, c):
    # d_ac <= d_ab + d_bc checked in exact arithmetic on the squares:
    # equivalent to (d_ac^2 - d_ab^2 - d_bc^2)^2 <= 4 d_ab^2 d_bc^2
    # whenever the left inner term is positive.
    ab = _sq_dist_rational(a, b)
    bc = _sq_dist_rational(b, c)
    ac = _sq_dist_rational(a, c)
    gap = ac - ab - bc
    if gap <= 0:
        return
    assert gap * gap <= 4 * ab * bc


def test_ball_volume(t2, t3):
    assert ball_volume(0.1, t2) == pytest.approx(math.pi * 0.01)
    assert ball_volume(0.5, t2) == pytest.approx(0.7853981633974483)
    assert ball_volume(0.1, t3) == pytest.approx(0.0041887902047863905)
    with pytest.raises(EmbeddedBallError):
        ball_volume(0.6, t2)
    with pytest.raises(EmbeddedBallError):
        ball_volume(0.0, t2)


def test_cover_counts(t2):
    assert len(generate_cover(0.25, t2)) == 36
    cov = generate_cover(0.125, t2)
    assert len(cov) == 144
    assert 144 <= (2 * math.sqrt(2)) ** 2 * 0.125 ** -2
    with pytest.raises(CoverRadiusError):
        generate_cover(0.5, t2)
    with pytest.raises(CoverRadiusError):
        generate_cover(0.0, t2)


def test_cover_property_brute_force(t2):
    # every random point within r of some center (oracle: direct distances)
    from scipy.spatial import cKDTree

    r = 0.25
    cov = generate_cover(r, t2)
    rng = np.random.default_rng(42)
    pts = rng.random((1_000_000, 2))
    tree = cKDTree(cov.centers, boxsize=1.0)
    dists, _ = tree.query(pts, k=1)
    assert dists.max() <= r


def test_cover_property_dim3(t3):
    from scipy.spatial import cKDTree

    r = 0.25
    cov = generate_cover(r, t3)
    rng = np.random.default_rng(43)
    pts = rng.random((200_000, 3))
    tree = cKDTree(cov.centers, boxsize=1.0)
    dists, _ = tree.query(pts, k=1)
    assert dists.max() <= r


def test_overlap_multiplicity_scale_invariance(t2):
    m8 = generate_cover(0.125, t2).overlap_bound
    m16 = generate_cover(0.0625, t2).overlap_bound
    assert m8 == m16
    # geometric packing bound (4 sqrt(2) + 1)^2 for doubled balls
    assert m8 <= 43


def test_overlap_multiplicity_nongrid_path(t2):
    # a hand-built (still covering) center set takes the brute-force probe
    cov = generate_cover(0.25, t2)
    from nodalscope.geometry import CoverSet

    shifted = CoverSet(radius=cov.radius,
                       centers=wrap_point(cov.centers + 0.013),
                       overlap_bound=0, grid_axis_count=None)
    assert overlap_multiplicity(shifted, t2) == cov.overlap_bound


def test_cardinality_bound_dyadic_sweep(t2, t3):
    for model, n in ((t2, 2), (t3, 3)):
        c0 = (2 * math.sqrt(n)) ** n
        for j in range(2, 6):
            r = 2.0 ** -j
            cov = generate_cover(r, model)
            assert len(cov) * r ** n <= c0 + 1e-9


def test_wrap_point():
    assert np.allclose(wrap_point((1.25, -0.25)), [0.25, 0.75])
