"""Multifunctions given by sampled graphs.

A multifunction ``F: R^m -> P(R^n)`` is stored as a point cloud in
``R^(m+n)``; the value ``F(x)`` is the set of y-parts of graph samples
whose x-part lies within ``slab`` of ``x``.  Comparisons between sampled
sections use the tolerance ``tau = 2 (slab + resolution)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _accel
from .core_sets import ImplicitSetSpec, PointCloud, as_point, dedupe, sample, single_linkage
from .errors import DimensionMismatch, EmptySectionError, InputError, OutsideDomainError
from .metrics import hausdorff, kuratowski_dist

PREIMAGE_MODES = ("strong", "lower", "upper", "weak", "point")


@dataclass(frozen=True, eq=False)
class MultifunctionGraph:
    m: int
    n: int
    graph: PointCloud
    slab: float = None

    def __post_init__(self):
        if self.graph.dim != self.m + self.n:
            raise DimensionMismatch(f"graph dimension {self.graph.dim} != m + n = {self.m + self.n}")
        slab = self.graph.resolution if self.slab is None else float(self.slab)
        if slab < self.graph.resolution * (1 - 1e-12):
            raise InputError(f"slab {slab} is below the graph resolution {self.graph.resolution}")
        object.__setattr__(self, "slab", slab)

    @classmethod
    def from_spec(cls, spec, m, grid_step, slab=None):
        if not isinstance(spec, ImplicitSetSpec):
            raise InputError("expected an ImplicitSetSpec")
        return cls(m, spec.dim - m, sample(spec, grid_step), slab)

    @property
    def xs(self):
        return self.graph.points[:, :self.m]

    @property
    def ys(self):
        return self.graph.points[:, self.m:]

    @property
    def resolution(self):
        return self.graph.resolution

    @property
    def tau(self):
        return 2.0 * (self.slab + self.graph.resolution)

    def _edge_mask(self, mask):
        """Graph samples under ``mask`` that touch the window boundary."""
        return mask & (self.graph.norms() > self.graph.window_radius - self.slab)

    def _cloud(self, Y, truncated=False):
        return PointCloud(self.n, Y, self.graph.resolution, self.graph.window_radius, truncated)


def _rows_within(X, x, r):
    d2 = ((X - x) ** 2).sum(axis=1)
    return d2 <= r * r


def section(F, x, slab=None):
    """Sampled value ``F(x)``: y-parts of graph samples with ``|x' - x| <= slab``."""
    x = as_point(x, F.m)
    mask = _rows_within(F.xs, x, F.slab if slab is None else slab)
    return F._cloud(F.ys[mask], bool(F._edge_mask(mask).any()))


def domain(F):
    """Projection of the graph onto the x-coordinates, one sample per resolution cell."""
    X = dedupe(F.xs, F.graph.resolution)
    return PointCloud(F.m, X, F.graph.resolution, F.graph.window_radius)


def _section_at_a(F, a):
    Sa = section(F, a)
    if Sa.is_empty:
        raise OutsideDomainError(f"{np.asarray(a).tolist()} is outside the sampled domain")
    return Sa


def pre_image(F, a, mode="strong", tol=None):
    """The five pre-images of a sampled multifunction.

    ``mode`` is one of ``strong``, ``lower``, ``upper``, ``weak`` (``a`` is
    a point of the domain) or ``point`` (``a`` is a point of the value
    space ``R^n``).  Candidates are the points of :func:`domain`.
    """
    if mode not in PREIMAGE_MODES:
        raise InputError(f"unknown pre-image mode {mode!r}")
    tau = F.tau if tol is None else float(tol)
    D = domain(F)
    if len(D) == 0:
        return D
    # every section of a domain point in one KD-tree pass over the x-parts
    rows = cKDTree(F.xs).query_ball_point(D.points, F.slab)
    Y = F.ys
    keep = np.zeros(len(D), dtype=bool)
    if mode == "point":
        y = as_point(a, F.n)
        for i, r in enumerate(rows):
            keep[i] = len(r) > 0 and _accel.min_dist(y[None, :], Y[r])[0] <= tau
        return D.subset(keep)
    Sa = _section_at_a(F, as_point(a, F.m)).points
    for i, r in enumerate(rows):
        if not r:
            continue
        Sx = Y[r]
        to_a = _accel.min_dist(Sx, Sa)
        inner = to_a.max()                        # sup over F(x) of d(., F(a))
        if mode == "weak":
            keep[i] = to_a.min() <= tau
        elif mode == "lower":
            keep[i] = inner <= tau
        else:
            outer = _accel.min_dist(Sa, Sx).max()  # sup over F(a) of d(., F(x))
            keep[i] = outer <= tau and (mode == "upper" or inner <= tau)
    return D.subset(keep)


def pre_image_strong(F, a, tol=None):
    return pre_image(F, a, "strong", tol)


def pre_image_lower(F, a, tol=None):
    """Domain points with ``F(x) ⊂ F(a)`` (to tolerance)."""
    return pre_image(F, a, "lower", tol)


def pre_image_upper(F, a, tol=None):
    """Domain points with ``F(x) ⊃ F(a)`` (to tolerance)."""
    return pre_image(F, a, "upper", tol)


def pre_image_weak(F, a, tol=None):
    return pre_image(F, a, "weak", tol)


def pre_image_point(F, y, tol=None):
    """Domain points whose value contains ``y`` (to tolerance)."""
    return pre_image(F, y, "point", tol)


def delta(F, x, y):
    """``d(y, F(x))``; ``inf`` when ``x`` is off the sampled domain."""
    y = as_point(y, F.n)
    S = section(F, x)
    return float(_accel.min_dist(y[None, :], S.points)[0])


def delta_sup(F, G, x, x2):
    """``max_{y in G(x2)} d(y, F(x))``."""
    Fx = section(F, x)
    Gx = section(G, x2)
    if Fx.is_empty:
        raise EmptySectionError(f"F has an empty section at {np.asarray(x).tolist()}", side="F")
    if Gx.is_empty:
        raise EmptySectionError(f"G has an empty section at {np.asarray(x2).tolist()}", side="G")
    if F.n != G.n:
        raise DimensionMismatch("value spaces differ")
    return float(_accel.min_dist(Gx.points, Fx.points).max())


def dH_field(F, G, x, x2):
    """Hausdorff distance between ``F(x)`` and ``G(x2)`` (``inf`` if exactly one is empty)."""
    return hausdorff(section(F, x), section(G, x2))


def dK_field(F, G, x, x2):
    """Kuratowski distance between ``F(x)`` and ``G(x2)``; finite for empty sections."""
    return kuratowski_dist(section(F, x), section(G, x2))


@dataclass(frozen=True, eq=False)
class KuratowskiLimit:
    points: PointCloud
    truncated: bool
    radius: float


def default_radii(F, r0=None, count=11):
    if r0 is None:
        r0 = min(1024.0 * F.slab, 0.5 * F.graph.window_radius)
    return r0 * 0.5 ** np.arange(count)


def _limit_candidates(F, a, radii, tol):
    a = as_point(a, F.m)
    radii = default_radii(F) if radii is None else np.asarray(radii, dtype=np.float64)
    if radii.ndim != 1 or len(radii) < 2 or not (np.diff(radii) < 0).all() or radii[-1] <= 0:
        raise InputError("radii must be a strictly decreasing list of positive numbers")
    tol = 2.0 * F.graph.resolution if tol is None else float(tol)
    d = np.sqrt(((F.xs - a) ** 2).sum(axis=1))
    punct = d > 1e-12 * (1.0 + np.linalg.norm(a))
    balls = [punct & (d <= r) for r in radii]
    if not balls[0].any():
        raise OutsideDomainError(f"{a.tolist()} is isolated in the sampled domain")
    K = max(k for k, b in enumerate(balls) if b.any())
    # values escaping through the window near a make every limit suspect
    truncated = any(F._edge_mask(b).any() for b in balls[1:])
    ball = balls[K]
    Y = F.ys[ball]
    # chains of values closer than tol form one limit point (slack absorbs rounding)
    tol = tol * (1.0 + 1e-9)
    labels = single_linkage(Y, tol)
    centres = np.array([Y[labels == c].mean(axis=0) for c in range(labels.max() + 1)])
    return a, Y, labels, centres, F.xs[ball], d[ball], tol, truncated, float(radii[K])


def kuratowski_limsup(F, a, radii=None, tol=None):
    """Value clusters of ``F`` over the smallest punctured ball around ``a`` holding samples.

    Each cluster (single linkage at ``tol``) is reported by its mean.
    """
    _, _, _, centres, _, _, _, truncated, r = _limit_candidates(F, a, radii, tol)
    return KuratowskiLimit(F._cloud(centres, truncated), truncated, r)


def kuratowski_liminf(F, a, radii=None, tol=None):
    """Limsup clusters that come within ``tol`` of the value at every sampled ``x`` near ``a``."""
    a, Y, labels, centres, Xb, db, tol, truncated, r = _limit_candidates(F, a, radii, tol)
    keep = np.ones(len(centres), dtype=bool)
    for x, dx in zip(Xb, db):
        # a local section never reaches across a
        S = section(F, x, slab=min(F.slab, 0.5 * dx))
        near = _accel.min_dist(Y, S.points) <= tol
        hit = np.zeros(len(centres), dtype=bool)
        hit[labels[near]] = True
        keep &= hit
        if not keep.any():
            break
    return KuratowskiLimit(F._cloud(centres[keep], truncated), truncated, r)


@dataclass(frozen=True, eq=False)
class GeneralZeroSet:
    points: PointCloud


def general_zero_set(f_graph):
    """x-parts of graph samples with ``|y| <= slab``: zeros of the closure of the graph."""
    F = f_graph
    mask = np.linalg.norm(F.ys, axis=1) <= F.slab
    return GeneralZeroSet(PointCloud(F.m, F.xs[mask], F.graph.resolution, F.graph.window_radius))


def dist_to_graph(F, X, Y):
    """Distance from the points ``(x, y)`` to the sampled graph."""
    P = np.hstack([np.asarray(X, float).reshape(-1, F.m), np.asarray(Y, float).reshape(-1, F.n)])
    return _accel.min_dist(P, F.graph.points)


__all__ = [
    "MultifunctionGraph",
    "KuratowskiLimit",
    "GeneralZeroSet",
    "section",
    "domain",
    "pre_image",
    "pre_image_strong",
    "pre_image_lower",
    "pre_image_upper",
    "pre_image_weak",
    "pre_image_point",
    "delta",
    "delta_sup",
    "dH_field",
    "dK_field",
    "kuratowski_limsup",
    "kuratowski_liminf",
    "general_zero_set",
    "dist_to_graph",
    "default_radii",
]
