"""Point-cloud representation of closed sets, sampling, point-to-set distance."""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import _accel
from .errors import DimensionMismatch, ExprDomainError, InputError
from .expr import ExprFn, parse_expr

# damped projection steps applied to every candidate of an equality constraint
PROJECTION_STEPS = 20


def as_point(x, dim=None):
    """Coerce to a finite 1-d float array, optionally checking its dimension."""
    p = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if p.ndim != 1 or p.size == 0:
        raise InputError(f"a point must be a non-empty coordinate list, got {x!r}")
    if not np.isfinite(p).all():
        raise InputError(f"point has non-finite coordinates: {p.tolist()}")
    if dim is not None and p.size != dim:
        raise DimensionMismatch(f"point of dimension {p.size}, expected {dim}")
    return p


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Finite sample of a closed set.

    ``resolution`` bounds the Hausdorff gap between the represented set
    (inside the sampling ball of radius ``window_radius``) and the sample.
    An empty ``points`` array represents the empty set.
    """

    dim: int
    points: np.ndarray
    resolution: float
    window_radius: float
    truncated: bool = field(default=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.size == 0:
            pts = np.zeros((0, self.dim))
        if pts.ndim == 1 and self.dim == 1:
            pts = pts[:, None]
        if self.dim < 1 or pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionMismatch(f"points of shape {pts.shape} do not match dim={self.dim}")
        if not np.isfinite(pts).all():
            raise InputError("point cloud contains non-finite coordinates")
        if not self.resolution > 0 or not self.window_radius > 0:
            raise InputError("resolution and window_radius must be positive")
        if len(pts):
            r = np.sqrt(np.einsum("ij,ij->i", pts, pts)).max()
            if r > self.window_radius * (1 + 1e-12) + 1e-300:
                raise InputError(f"point of norm {r} outside window radius {self.window_radius}")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points, resolution, window_radius=None, dim=None):
        pts = np.asarray(points, dtype=np.float64)
        if dim is None:
            if pts.ndim != 2:
                raise InputError("cannot infer dimension; pass dim=")
            dim = pts.shape[1]
        pts = pts.reshape(-1, dim)
        if window_radius is None:
            r = float(np.linalg.norm(pts, axis=1).max()) if len(pts) else 0.0
            window_radius = r if r > 0 else float(resolution)
        return cls(dim, pts, float(resolution), float(window_radius))

    @classmethod
    def empty(cls, dim, resolution=1.0, window_radius=1.0):
        return cls(dim, np.zeros((0, dim)), resolution, window_radius)

    def __len__(self):
        return len(self.points)

    @property
    def is_empty(self):
        return len(self.points) == 0

    def subset(self, mask):
        return replace(self, points=self.points[mask])

    def norms(self):
        return np.linalg.norm(self.points, axis=1)

    def same_set(self, other):
        """Exact set equality of the sample points (order and duplicates ignored)."""
        if self.dim != other.dim:
            return False
        a = np.unique(self.points, axis=0)
        b = np.unique(other.points, axis=0)
        return a.shape == b.shape and bool((a == b).all())


@dataclass
class ImplicitSetSpec:
    """Semialgebraic set ``{x in box : e(x) = 0 for e in equalities, g(x) >= 0 for g in inequalities}``."""

    dim: int
    equalities: list = field(default_factory=list)
    inequalities: list = field(default_factory=list)
    box: np.ndarray = None
    equality_tolerance: float = 1e-6

    def __post_init__(self):
        self.equalities = [parse_expr(e, self.dim) for e in self.equalities]
        self.inequalities = [parse_expr(g, self.dim) for g in self.inequalities]
        if self.box is None:
            raise InputError("an implicit set needs a bounding box")
        box = np.asarray(self.box, dtype=np.float64)
        if box.shape != (self.dim, 2) or not np.isfinite(box).all():
            raise InputError(f"box must be {self.dim} finite [lo, hi] pairs")
        self.box = box
        if not self.equality_tolerance > 0:
            raise InputError("equality_tolerance must be positive")

    @property
    def window_radius(self):
        return float(np.linalg.norm(np.abs(self.box).max(axis=1)))


def grid_points(box, step, anchor=None):
    """Regular grid with spacing ``step`` covering ``box`` (rows are points).

    With ``anchor`` the grid passes exactly through that point.
    """
    box = np.asarray(box, dtype=np.float64)
    axes = []
    for k, (lo, hi) in enumerate(box):
        if not hi > lo:
            raise InputError(f"empty box along axis {k}: [{lo}, {hi}]")
        if anchor is None:
            n = int(np.floor((hi - lo) / step + 1e-9))
            axes.append(lo + step * np.arange(n + 1))
        else:
            c = anchor[k]
            k0 = int(np.ceil((lo - c) / step - 1e-9))
            k1 = int(np.floor((hi - c) / step + 1e-9))
            axes.append(c + step * np.arange(k0, k1 + 1))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _residuals_and_jac(equalities, X):
    vals, jacs = [], []
    for e in equalities:
        v, g = e.value_and_grad(X)
        vals.append(v)
        jacs.append(g)
    return np.stack(vals, axis=1), np.stack(jacs, axis=1)


def project_to_zero_set(equalities, X, steps=PROJECTION_STEPS):
    """Damped Gauss-Newton projection of the rows of ``X`` onto ``{e = 0}``.

    A step is halved (at most 8 times) until the residual norm decreases;
    points whose Jacobian is singular or non-finite stay where they are.
    Returns the moved points and their final residual norms.
    """
    X = np.array(X, dtype=np.float64)
    if not equalities or len(X) == 0:
        return X, np.zeros(len(X))
    F, J = _residuals_and_jac(equalities, X)
    res = np.linalg.norm(F, axis=1)
    for _ in range(steps):
        ok = np.isfinite(J).all(axis=(1, 2)) & (res > 0)
        if not ok.any():
            break
        idx = np.flatnonzero(ok)
        Jk, Fk = J[idx], F[idx]
        # minimum-norm step  J^T (J J^T)^-1 F
        JJt = Jk @ np.swapaxes(Jk, 1, 2)
        det_ok = np.abs(np.linalg.det(JJt)) > 1e-300
        idx, Jk, Fk, JJt = idx[det_ok], Jk[det_ok], Fk[det_ok], JJt[det_ok]
        if len(idx) == 0:
            break
        step = (np.swapaxes(Jk, 1, 2) @ np.linalg.solve(JJt, Fk[:, :, None]))[:, :, 0]
        lam = np.ones(len(idx))
        pending = np.arange(len(idx))
        for _ in range(9):
            trial = X[idx[pending]] - lam[pending, None] * step[pending]
            try:
                Ft, Jt = _residuals_and_jac(equalities, trial)
            except ExprDomainError:
                Ft = np.full((len(pending), len(equalities)), np.inf)
                Jt = np.full((len(pending), len(equalities), X.shape[1]), np.nan)
                for j in range(len(pending)):
                    try:
                        f1, j1 = _residuals_and_jac(equalities, trial[j:j + 1])
                        Ft[j], Jt[j] = f1[0], j1[0]
                    except ExprDomainError:
                        pass
            rt = np.linalg.norm(Ft, axis=1)
            better = rt < res[idx[pending]]
            take = idx[pending[better]]
            X[take] = trial[better]
            F[take], J[take], res[take] = Ft[better], Jt[better], rt[better]
            pending = pending[~better]
            if len(pending) == 0:
                break
            lam[pending] *= 0.5
    return X, res


def _satisfies(inequalities, X):
    ok = np.ones(len(X), dtype=bool)
    for g in inequalities:
        ok &= g(X) >= 0
    return ok


def level_band(equalities, X, tol, half_cell):
    """Mask of grid points that are candidates for the zero set.

    A point qualifies if its residual is within ``tol`` or its linearised
    distance ``|e| / |grad e|`` is within ``half_cell`` for every equality.
    """
    keep = np.ones(len(X), dtype=bool)
    for e in equalities:
        v, g = e.value_and_grad(X)
        gn = np.linalg.norm(g, axis=1)
        with np.errstate(all="ignore"):
            lin = np.where(np.isfinite(gn) & (gn > 0), np.abs(v) / gn, np.where(np.isinf(gn), 0.0, np.inf))
        keep &= (np.abs(v) <= tol) | (lin <= half_cell)
    return keep


def sample(spec, grid_step, seed=0):
    """Sample an implicit set on a regular grid.

    Grid points of ``spec.box`` satisfying the inequalities are kept; for
    equality constraints, grid points in a one-cell band around the zero set
    are projected onto it by up to ``PROJECTION_STEPS`` damped Gauss-Newton
    steps and retained if the final residual is within the tolerance (it
    drops to a tenth of it whenever the projection converges).

    The grid is fully deterministic; ``seed`` is accepted for interface
    stability and draws no random numbers.
    """
    if grid_step is None or not grid_step > 0:
        raise InputError("grid_step must be given and positive")
    box = spec.box
    if grid_step > (box[:, 1] - box[:, 0]).min():
        raise InputError("grid_step exceeds the shortest box edge")
    X = grid_points(box, grid_step)
    resolution = grid_step * np.sqrt(spec.dim)
    try:
        if spec.equalities:
            X = X[level_band(spec.equalities, X, spec.equality_tolerance, 0.5 * resolution)]
            X, res = project_to_zero_set(spec.equalities, X)
            X = X[res <= spec.equality_tolerance]
            inside = ((X >= box[:, 0] - 1e-12) & (X <= box[:, 1] + 1e-12)).all(axis=1)
            X = X[inside]
        X = X[_satisfies(spec.inequalities, X)]
    except ExprDomainError as exc:
        raise ExprDomainError(f"expression undefined inside the box: {exc}", point=exc.point) from exc
    return PointCloud(spec.dim, X, resolution, spec.window_radius)


def _check_dims(a, b):
    if a != b:
        raise DimensionMismatch(f"dimension mismatch: {a} vs {b}")


def dist_point_set(x, A):
    """Euclidean distance from ``x`` to the cloud ``A``; ``inf`` for an empty cloud."""
    x = as_point(x)
    _check_dims(x.size, A.dim)
    if A.is_empty:
        return float("inf")
    return float(_accel.min_dist(x[None, :], A.points)[0])


def dist_points_set(X, A):
    """Vectorised :func:`dist_point_set` over the rows of ``X``."""
    X = np.asarray(X, dtype=np.float64).reshape(-1, A.dim)
    return _accel.min_dist(X, A.points)


def restrict_ball(E, r):
    """``E ∩ closed ball(0, r)``."""
    if not r > 0:
        raise InputError("radius must be positive")
    return E.subset(E.norms() <= r)


def intersect_sphere(E, r, shell):
    """Points of ``E`` whose norm is within ``shell`` of ``r``."""
    if not r > 0 or not shell > 0:
        raise InputError("radius and shell must be positive")
    if shell < E.resolution * (1 - 1e-12):
        raise InputError(f"shell {shell} is thinner than the cloud resolution {E.resolution}")
    return E.subset(np.abs(E.norms() - r) <= shell)


def single_linkage(points, tol):
    """Cluster labels of the connected components of the graph joining points within ``tol``."""
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    pairs = cKDTree(points).query_pairs(tol, output_type="ndarray")
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return labels


def dedupe(points, tol):
    """Keep one representative per ``tol``-cell (first in lexicographic order)."""
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        return points
    keys = np.floor(points / tol).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    return points[np.sort(first)]


__all__ = [
    "PointCloud",
    "ImplicitSetSpec",
    "ExprFn",
    "as_point",
    "grid_points",
    "sample",
    "dist_point_set",
    "dist_points_set",
    "restrict_ball",
    "single_linkage",
    "intersect_sphere",
    "project_to_zero_set",
    "dedupe",
]
