"""Tangent cones as limits of dilations, nearest-point maps, conic exponents."""

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from .core_sets import PointCloud, as_point, dist_point_set, dist_points_set, restrict_ball
from .errors import FitError, InputError, NumericalError
from .fits import fit_power_law
from .metrics import hausdorff
from .multifunctions import MultifunctionGraph

# annulus of the dilated set in which directions are harvested
ANNULUS = (0.5, 2.0)
DEFAULT_T0 = 0.5
DEFAULT_GAMMA = 0.7
DEFAULT_STEPS = 16
MAX_CLUSTER_TOL = 0.05


@dataclass
class ConeStep:
    t: float
    count: int
    drift: float
    resolution_limited: bool
    window_limited: bool


@dataclass(eq=False)
class ConePresentation:
    """Cone with vertex 0 given by its unit directions.

    ``status`` is ``"ok"``, ``"isolated"`` (the base point is an isolated
    point of the set, cone ``{0}``) or ``"outside_closure"`` (cone empty).
    """

    dim: int
    directions: np.ndarray
    cluster_tol: float
    status: str = "ok"
    steps: list = field(default_factory=list)

    @property
    def is_empty(self):
        return len(self.directions) == 0

    def drift(self):
        return np.array([s.drift for s in self.steps])

    def ball(self, r, spacing):
        """The cone intersected with the closed ball of radius ``r``, sampled along rays."""
        s = np.arange(0.0, r + 0.5 * spacing, spacing)
        s = s[s <= r]
        if len(self.directions) == 0:
            pts = np.zeros((1, self.dim)) if self.status == "isolated" else np.zeros((0, self.dim))
        else:
            pts = (s[None, :, None] * self.directions[:, None, :]).reshape(-1, self.dim)
            pts = np.vstack([np.zeros((1, self.dim)), pts])
        return PointCloud(self.dim, pts, spacing, r)


def dilate(E, a, t):
    """``(E - a) / t`` with resolution and window rescaled."""
    if not t > 0:
        raise InputError("dilation factor must be positive")
    a = as_point(a, E.dim)
    pts = (E.points - a) / t
    R = (E.window_radius + np.linalg.norm(a)) / t
    return PointCloud(E.dim, pts, E.resolution / t, R)


def _unit(P):
    n = np.linalg.norm(P, axis=1)
    return P / n[:, None]


def tangent_cone(E, a, t0=DEFAULT_T0, gamma=DEFAULT_GAMMA, steps=DEFAULT_STEPS, cluster_tol=None, min_samples=3):
    """Peano tangent cone of the sampled set ``E`` at ``a``.

    For ``t_k = t0 * gamma**k`` the directions of the dilated samples lying
    in the annulus ``0.5 <= |v| <= 2`` are collected.  Directions from the
    tail of the schedule (``k >= steps // 2``) are clustered, and a cluster
    is kept when it is hit in at least half of the usable tail steps,
    including the last one; it is reported as the mean direction of its
    members at the last usable step.  Each
    step records the Hausdorff drift between consecutive dilated annulus
    samples as a convergence diagnostic.
    """
    a = as_point(a, E.dim)
    if not 0 < gamma < 1 or steps < 5 or not t0 > 0:
        raise InputError("need t0 > 0, 0 < gamma < 1 and steps >= 5")
    ts = t0 * gamma ** np.arange(steps)
    if cluster_tol is None:
        cluster_tol = min(3.0 * E.resolution / ts[-1], MAX_CLUSTER_TOL)
    if dist_point_set(a, E) > E.resolution:
        return ConePresentation(E.dim, np.zeros((0, E.dim)), cluster_tol, "outside_closure")

    rel = E.points - a
    rad = np.linalg.norm(rel, axis=1)
    na = np.linalg.norm(a)
    harvested, info = [], []
    prev = None
    for t in ts:
        ring = (rad >= ANNULUS[0] * t) & (rad <= ANNULUS[1] * t)
        pts = rel[ring] / t
        drift = np.nan
        if prev is not None and len(prev) and len(pts):
            drift = max(_accel.directed_hausdorff(prev, pts), _accel.directed_hausdorff(pts, prev))
        prev = pts
        info.append(ConeStep(
            t=float(t),
            count=int(ring.sum()),
            drift=float(drift),
            resolution_limited=bool(E.resolution / t > ANNULUS[0] or (0 < ring.sum() < min_samples)),
            window_limited=bool(na + ANNULUS[0] * t > E.window_radius),
        ))
        harvested.append(_unit(pts) if len(pts) else np.zeros((0, E.dim)))

    voters = [k for k in range(steps // 2, steps) if not (info[k].resolution_limited or info[k].window_limited)]
    if not voters:
        raise NumericalError("every tail step is resolution- or window-limited; refine the cloud or coarsen the schedule")
    if all(info[k].count == 0 for k in voters):
        return ConePresentation(E.dim, np.zeros((0, E.dim)), cluster_tol, "isolated", info)

    # smallest t first so the most accurate directions seed the clusters
    pool = np.vstack([harvested[k] for k in reversed(voters)])
    _, rep_idx = _accel.greedy_cluster(pool, cluster_tol)
    reps = pool[rep_idx]
    hits = np.zeros(len(reps), dtype=int)
    for k in voters:
        if len(harvested[k]):
            hits += _accel.min_dist(reps, harvested[k]) <= cluster_tol
    last = next(harvested[k] for k in reversed(voters) if len(harvested[k]))
    # transient directions fade out before the end of the schedule
    in_last = _accel.min_dist(reps, last) <= cluster_tol
    keep = reps[(hits >= 0.5 * len(voters)) & in_last]
    if len(keep) == 0:
        return ConePresentation(E.dim, np.zeros((0, E.dim)), cluster_tol, "ok", info)

    refined = []
    for r in keep:
        m = last[np.linalg.norm(last - r, axis=1) <= cluster_tol].mean(axis=0)
        refined.append(m / np.linalg.norm(m))
    refined = np.array(refined)
    _, final = _accel.greedy_cluster(refined, cluster_tol)
    return ConePresentation(E.dim, refined[final], cluster_tol, "ok", info)


def nearest_point_multifunction(M, xs, tol=None):
    """Graph of ``x -> {y in M : |x - y| = d(x, M)}`` over the points ``xs``.

    Near-minimisers within ``tol`` (default: the cloud resolution) of the
    distance are all kept, so equidistant points survive sampling.
    """
    if M.is_empty:
        raise InputError("nearest points to an empty set are undefined")
    tol = M.resolution if tol is None else float(tol)
    X = np.asarray(xs, dtype=np.float64).reshape(-1, M.dim)
    rows = []
    for x, d in zip(X, dist_points_set(X, M)):
        dd = np.linalg.norm(M.points - x, axis=1)
        ys = M.points[dd <= d + tol]
        rows.append(np.hstack([np.repeat(x[None, :], len(ys), axis=0), ys]))
    G = np.vstack(rows)
    R = float(np.linalg.norm(G, axis=1).max()) or M.resolution
    return MultifunctionGraph(M.dim, M.dim, PointCloud(2 * M.dim, G, M.resolution, R), M.resolution)


def conic_exponent(E, r_schedule, cone=None, **cone_kw):
    """Exponent ``alpha`` in ``dist_H(E[r], V[r]) ~ c r**alpha`` with ``V`` the tangent cone at 0.

    Radii whose distance is below three resolutions are dropped; if all are,
    ``E`` is treated as a cone at 0 and a :class:`FitError` is raised.
    """
    r = np.sort(np.asarray(r_schedule, dtype=np.float64))[::-1]
    if len(r) < 5 or (r <= 0).any() or len(np.unique(r)) != len(r):
        raise InputError("r_schedule needs at least five distinct positive radii")
    origin = np.zeros(E.dim)
    if dist_point_set(origin, E) > E.resolution:
        raise InputError("0 is not in the sampled set")
    V = tangent_cone(E, origin, **cone_kw) if cone is None else cone
    dists = []
    for ri in r:
        Er = restrict_ball(E, ri)
        Vr = V.ball(ri, 0.5 * E.resolution)
        dists.append(hausdorff(Er, Vr))
    dists = np.array(dists)
    good = np.isfinite(dists) & (dists >= 3.0 * E.resolution)
    if not good.any():
        raise FitError("E coincides with its tangent cone at 0 at sampling accuracy (cone detected)")
    if good.sum() < 5:
        raise FitError(f"only {int(good.sum())} radii resolve the distance to the cone; need 5")
    fit = fit_power_law(r[good], dists[good])
    fit.notes.update({"radii": r.tolist(), "distances": dists.tolist(), "cone_directions": V.directions.tolist()})
    return fit


__all__ = [
    "ConePresentation",
    "ConeStep",
    "dilate",
    "tangent_cone",
    "nearest_point_multifunction",
    "conic_exponent",
]
