"""Hausdorff distance on compacta and its extension to all closed sets.

Closed subsets of R^n are mapped onto the unit sphere S^n by the inverse of
the stereographic projection from the north pole ``p = (0, ..., 0, 1)`` onto
the hyperplane ``x_{n+1} = -1``; the north pole is adjoined to every image,
so the empty set becomes ``{p}`` and sets escaping to infinity converge to
it.  The Kuratowski distance is the chordal Hausdorff distance of the
images.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel
from .core_sets import PointCloud, _check_dims, as_point
from .errors import InputError

SPHERE_TOL = 1e-12
# diam S^n + 1, used when exactly one of two sphere subsets is empty
EMPTY_SENTINEL = 3.0


def north_pole(n):
    p = np.zeros(n + 1)
    p[-1] = 1.0
    return p


def stereo_forward(x):
    """Project a sphere point (not the north pole) to R^n."""
    x = as_point(x)
    if abs(np.linalg.norm(x) - 1.0) > SPHERE_TOL:
        raise InputError(f"point {x.tolist()} is not on the unit sphere")
    if x.size < 2:
        raise InputError("sphere points need at least two coordinates")
    head, z = x[:-1], x[-1]
    if z > 0 and not head.any():
        raise InputError("stereographic projection is undefined at the north pole")
    if z <= 0:
        return -2.0 * head / (z - 1.0)
    # near the pole 1 - z cancels; on the sphere 1 - z = |head|^2 / (1 + z)
    return 2.0 * head * (1.0 + z) / np.dot(head, head)


def stereo_inverse(y):
    """Sphere point on the line through the north pole and ``(y, -1)``.

    Intersecting ``p + t((y, -1) - p)`` with the sphere gives
    ``t = 4 / (|y|^2 + 4)``, hence ``h(y) = (4y, |y|^2 - 4) / (|y|^2 + 4)``.
    """
    return stereo_inverse_many(as_point(y)[None, :])[0]


def stereo_inverse_many(Y):
    Y = np.asarray(Y, dtype=np.float64)
    s = np.einsum("ij,ij->i", Y, Y)
    out = np.empty((Y.shape[0], Y.shape[1] + 1))
    out[:, :-1] = 4.0 * Y / (s + 4.0)[:, None]
    out[:, -1] = (s - 4.0) / (s + 4.0)
    return out


@dataclass(frozen=True, eq=False)
class CompactifiedSet:
    """Subset of S^n given by explicit sphere points (north pole included)."""

    n: int
    sphere_points: np.ndarray
    includes_pole: bool = True

    def __len__(self):
        return len(self.sphere_points)


def compactify(A):
    """Image of ``A`` on the sphere together with the north pole."""
    pts = stereo_inverse_many(A.points) if len(A) else np.zeros((0, A.dim + 1))
    return CompactifiedSet(A.dim, np.vstack([pts, north_pole(A.dim)[None, :]]))


def _hausdorff_raw(P, Q):
    return max(_accel.directed_hausdorff(P, Q), _accel.directed_hausdorff(Q, P))


def hausdorff(A, B):
    """Hausdorff distance between two sampled sets.

    ``inf`` when exactly one side is empty, 0 when both are.
    """
    _check_dims(A.dim, B.dim)
    if A.is_empty and B.is_empty:
        return 0.0
    if A.is_empty or B.is_empty:
        return float("inf")
    return _hausdorff_raw(A.points, B.points)


def hausdorff_sphere_extended(S, T):
    """Chordal Hausdorff distance on the sphere, 3 if exactly one side is empty."""
    if len(S) == 0 and len(T) == 0:
        return 0.0
    if len(S) == 0 or len(T) == 0:
        return EMPTY_SENTINEL
    _check_dims(S.sphere_points.shape[1], T.sphere_points.shape[1])
    return _hausdorff_raw(S.sphere_points, T.sphere_points)


def kuratowski_dist(A, B):
    """Distance metrising Kuratowski convergence of closed sets; always finite."""
    _check_dims(A.dim, B.dim)
    return hausdorff_sphere_extended(compactify(A), compactify(B))


def resolution_bound(A, B):
    """Bound on the sampling error of either distance.

    ``stereo_inverse`` is 1-Lipschitz (its conformal factor is
    ``4 / (|y|^2 + 4) <= 1``), so the same bound serves both metrics.
    """
    return (0.0 if A.is_empty else A.resolution) + (0.0 if B.is_empty else B.resolution)


def stereo_lipschitz(R, samples=4000, seed=0):
    """Measured Lipschitz constant of ``stereo_inverse`` on the closed ball of radius ``R`` in R^2."""
    rng = np.random.default_rng(seed)
    y = rng.uniform(-R, R, size=(samples, 2))
    y = y[np.linalg.norm(y, axis=1) <= R]
    d = rng.normal(size=y.shape)
    d *= 1e-6 * R / np.linalg.norm(d, axis=1)[:, None]
    z = y + d
    ratio = np.linalg.norm(stereo_inverse_many(z) - stereo_inverse_many(y), axis=1) / np.linalg.norm(d, axis=1)
    return float(ratio.max())


__all__ = [
    "PointCloud",
    "CompactifiedSet",
    "north_pole",
    "stereo_forward",
    "stereo_inverse",
    "stereo_inverse_many",
    "compactify",
    "hausdorff",
    "hausdorff_sphere_extended",
    "kuratowski_dist",
    "resolution_bound",
    "stereo_lipschitz",
]
