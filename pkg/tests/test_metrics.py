import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import X0, X1
from tamegeo.core_sets import ImplicitSetSpec, PointCloud, sample
from tamegeo.errors import DimensionMismatch, InputError
from tamegeo.metrics import (
    EMPTY_SENTINEL,
    CompactifiedSet,
    compactify,
    hausdorff,
    hausdorff_sphere_extended,
    kuratowski_dist,
    north_pole,
    resolution_bound,
    stereo_forward,
    stereo_inverse,
    stereo_lipschitz,
)


def cloud(pts, res=0.01):
    return PointCloud.from_points(np.asarray(pts, dtype=float).reshape(len(pts), -1), res)


def test_stereo_forward_examples():
    np.testing.assert_array_equal(stereo_forward([0, 0, -1]), [0, 0])
    np.testing.assert_allclose(stereo_forward([1, 0, 0]), [2, 0])
    with pytest.raises(InputError):
        stereo_forward([0, 0, 1])
    with pytest.raises(InputError):
        stereo_forward([0.5, 0, 0])


def test_stereo_inverse_examples():
    np.testing.assert_array_equal(stereo_inverse([0, 0]), [0, 0, -1])
    np.testing.assert_allclose(stereo_forward(stereo_inverse([3, -7])), [3, -7], atol=1e-12)
    p = north_pole(2)
    gaps = [np.linalg.norm(stereo_inverse([t, 0]) - p) for t in (1, 10, 100)]
    assert gaps[0] > gaps[1] > gaps[2]


def test_stereo_inverse_is_line_sphere_intersection(rng):
    # independent oracle: solve |p + t(q - p)|^2 = 1 for the non-trivial root t
    p = north_pole(2)
    for y in rng.normal(scale=5, size=(50, 2)):
        q = np.r_[y, -1.0]
        d = q - p
        t = -2 * p.dot(d) / d.dot(d)
        np.testing.assert_allclose(stereo_inverse(y), p + t * d, atol=1e-14)


def test_round_trip_large_norms(rng):
    Y = rng.normal(size=(1000, 2)) * 10 ** rng.uniform(-3, 6, size=(1000, 1))
    worst = max(np.linalg.norm(stereo_forward(stereo_inverse(y)) - y) / max(1, np.linalg.norm(y)) for y in Y)
    assert worst <= 1e-12


def test_hausdorff_examples():
    x = np.linspace(0, 1, 101)
    A = PointCloud.from_points(np.c_[x, 0 * x], 0.01)
    O = cloud([[0, 0]])
    assert hausdorff(A, O) == pytest.approx(1, abs=A.resolution)
    assert hausdorff(A, A) == 0.0
    C = sample(ImplicitSetSpec(2, [["-", ["+", ["*", X0, X0], ["*", X1, X1]], 1]], [], [[-2, 2], [-2, 2]]), 0.01)
    assert hausdorff(C, O) == pytest.approx(1, abs=C.resolution)
    assert hausdorff(A, PointCloud.empty(2)) == np.inf
    assert hausdorff(PointCloud.empty(2), PointCloud.empty(2)) == 0.0
    with pytest.raises(DimensionMismatch):
        hausdorff(A, cloud([[0.0]]))


def test_sphere_extended_examples():
    p, s = north_pole(2), np.array([0, 0, -1.0])
    S = CompactifiedSet(2, p[None])
    T = CompactifiedSet(2, np.vstack([p, s]))
    assert hausdorff_sphere_extended(S, T) == pytest.approx(2)
    assert hausdorff_sphere_extended(T, T) == 0.0
    empty = CompactifiedSet(2, np.zeros((0, 3)), includes_pole=False)
    assert hausdorff_sphere_extended(S, empty) == EMPTY_SENTINEL == 3
    assert hausdorff_sphere_extended(empty, empty) == 0.0


def test_compactify_examples():
    E = compactify(PointCloud.empty(2))
    np.testing.assert_array_equal(E.sphere_points, [[0, 0, 1]])
    Z = compactify(cloud([[0, 0]]))
    np.testing.assert_array_equal(Z.sphere_points, [[0, 0, -1], [0, 0, 1]])
    t = np.linspace(0, 10, 1001)
    L = compactify(PointCloud.from_points(np.c_[t, 0 * t], 0.01))
    assert np.abs(np.linalg.norm(L.sphere_points, axis=1) - 1).max() <= 1e-12


def test_kuratowski_examples():
    A = cloud([[0.5, 1.0], [2.0, -1.0]])
    assert kuratowski_dist(A, A) == 0.0
    assert kuratowski_dist(cloud([[0.0]]), PointCloud.empty(1)) == pytest.approx(2)
    with pytest.raises(DimensionMismatch):
        kuratowski_dist(A, cloud([[0.0]]))


def test_escaping_points_converge_to_empty_set():
    nus = 2.0 ** np.arange(11)
    d = np.array([kuratowski_dist(cloud([[nu]]), PointCloud.empty(1)) for nu in nus])
    assert (np.diff(d) < 0).all()
    # chord from h(nu) to the pole is exactly 4 / sqrt(nu^2 + 4)
    np.testing.assert_allclose(d, 4 / np.sqrt(nus ** 2 + 4), rtol=1e-12)
    assert kuratowski_dist(cloud([[400.0]]), PointCloud.empty(1)) < 0.01


def test_kuratowski_unbounded_set_is_finite():
    x = np.linspace(0.01, 100, 2000)
    H = PointCloud.from_points(np.c_[x, 1 / x], 0.05)
    assert np.isfinite(kuratowski_dist(H, PointCloud.empty(2)))


def test_lipschitz_comparison_on_unit_ball(rng):
    L = stereo_lipschitz(1.0)
    assert L <= 1 + 1e-6
    base = rng.uniform(-0.7, 0.7, size=(200, 2))
    for eps in (1e-4, 1e-3, 1e-2, 1e-1):
        moved = base + eps * rng.uniform(-1, 1, size=base.shape) / np.sqrt(2)
        A, B = cloud(base), cloud(moved)
        h = hausdorff(A, B)
        assert h <= eps
        assert kuratowski_dist(A, B) <= L * h + 1e-12


def test_resolution_bound():
    assert resolution_bound(cloud([[0.0]], 0.1), cloud([[1.0]], 0.2)) == pytest.approx(0.3)
    assert resolution_bound(cloud([[0.0]], 0.1), PointCloud.empty(1, resolution=5)) == 0.1


small_clouds = st.lists(st.tuples(st.floats(-20, 20), st.floats(-20, 20)), min_size=0, max_size=6)


@given(small_clouds, small_clouds, small_clouds)
def test_kuratowski_metric_axioms(a, b, c):
    A, B, C = (PointCloud.from_points(np.array(s, dtype=float).reshape(-1, 2), 0.1, window_radius=30, dim=2) for s in (a, b, c))
    ab = kuratowski_dist(A, B)
    assert ab == kuratowski_dist(B, A)
    assert kuratowski_dist(A, A) == 0.0
    assert 0 <= ab <= 2
    assert kuratowski_dist(A, C) <= ab + kuratowski_dist(B, C) + 1e-12
    if A.same_set(B):
        assert ab == 0.0
