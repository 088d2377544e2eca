"""Clarke subgradients of piecewise-smooth Lipschitz functions.

The subgradient at ``x`` is the convex hull of the limits of gradients
taken at differentiability points converging to ``x``.  Gradients are
sampled in shrinking balls around ``x`` away from the region seams (a null
set that may be discarded), grouped into clusters, and each cluster is
replaced by the exact one-sided limit when the owning piece's gradient is
continuous up to ``x``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import _accel
from .core_sets import PointCloud, as_point, grid_points, single_linkage
from .errors import ConvergenceError, InputError, NumericalError
from .expr import ExprFn, parse_expr
from .multifunctions import MultifunctionGraph


@dataclass(eq=False)
class Piece:
    """One smooth piece: ``value`` on ``{x : g(x) >= 0 for g in region}``."""

    region: list
    value: ExprFn
    gradient: list = None


class PiecewiseFn:
    """Piecewise-smooth function assembled from :class:`Piece` objects.

    The first piece whose region contains a point determines the value
    there; regions may overlap on seams, where values must agree.
    """

    def __init__(self, arity, pieces, lipschitz_bound):
        self.arity = int(arity)
        if self.arity < 1:
            raise InputError("arity must be positive")
        if not pieces:
            raise InputError("a piecewise function needs at least one piece")
        if not lipschitz_bound > 0:
            raise InputError("lipschitz_bound must be positive")
        self.lipschitz_bound = float(lipschitz_bound)
        self.pieces = []
        for p in pieces:
            if isinstance(p, Piece):
                region, value, grad = p.region, p.value, p.gradient
            else:
                region, value, grad = p.get("region", []), p["value"], p.get("gradient")
            region = [parse_expr(g, self.arity) for g in region]
            value = parse_expr(value, self.arity)
            if grad is not None:
                if len(grad) != self.arity:
                    raise InputError(f"gradient needs {self.arity} components")
                grad = [parse_expr(g, self.arity) for g in grad]
            self.pieces.append(Piece(region, value, grad))
        # a piece may use the closed-form fast path when its gradient is smooth
        self._smooth = np.array([
            all(g.is_smooth for g in p.gradient) if p.gradient is not None else p.value.is_smooth
            for p in self.pieces
        ])

    @classmethod
    def from_expr(cls, expr, arity, lipschitz_bound):
        return cls(arity, [Piece([], parse_expr(expr, arity))], lipschitz_bound)

    def scaled(self, c):
        """The function ``c * f``."""
        pieces = []
        for p in self.pieces:
            grad = None if p.gradient is None else [["*", c, g.tree] for g in p.gradient]
            pieces.append({"region": [g.tree for g in p.region], "value": ["*", c, p.value.tree], "gradient": grad})
        return PiecewiseFn(self.arity, pieces, abs(c) * self.lipschitz_bound)

    def _X(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :] if self.arity > 1 or X.size == 1 else X[:, None]
        if X.shape[1] != self.arity:
            raise InputError(f"expected points of dimension {self.arity}")
        return X

    def region_masks(self, X):
        X = self._X(X)
        masks = []
        for p in self.pieces:
            m = np.ones(len(X), dtype=bool)
            for g in p.region:
                m &= g(X) >= 0
            masks.append(m)
        return np.array(masks)

    def piece_index(self, X):
        """Index of the first piece containing each point (-1 if none)."""
        masks = self.region_masks(X)
        idx = np.argmax(masks, axis=0)
        idx[~masks.any(axis=0)] = -1
        return idx

    def __call__(self, X):
        X = self._X(X)
        idx = self.piece_index(X)
        if (idx < 0).any():
            bad = X[np.flatnonzero(idx < 0)[0]]
            raise InputError(f"point {bad.tolist()} lies in no region")
        out = np.empty(len(X))
        for k, p in enumerate(self.pieces):
            sel = idx == k
            if sel.any():
                out[sel] = p.value(X[sel])
        return out

    def piece_gradient(self, k, X):
        """Gradient of piece ``k``'s formula (declared, or central differences)."""
        return self._piece_gradient(k, X)[0]

    def _piece_gradient(self, k, X):
        # second value flags rows where a finite-difference stencil straddles a kink
        X = self._X(X)
        p = self.pieces[k]
        if p.gradient is not None:
            return np.stack([g(X) for g in p.gradient], axis=1), np.ones(len(X), dtype=bool)
        h = 1e-6 * np.maximum(1.0, np.linalg.norm(X, axis=1))
        G = np.empty_like(X)
        ok = np.ones(len(X), dtype=bool)
        f0 = p.value(X)
        for i in range(self.arity):
            E = np.zeros_like(X)
            E[:, i] = h
            fp, fm = p.value(X + E), p.value(X - E)
            fwd, bwd = (fp - f0) / h, (f0 - fm) / h
            G[:, i] = 0.5 * (fwd + bwd)
            ok &= np.abs(fwd - bwd) <= 1e-3 * (1.0 + np.abs(G[:, i]))
        return G, ok

    def gradient(self, X):
        X = self._X(X)
        idx = self.piece_index(X)
        G = np.full(X.shape, np.nan)
        for k in range(len(self.pieces)):
            sel = idx == k
            if sel.any():
                G[sel] = self.piece_gradient(k, X[sel])
        return G

    def seam_distance(self, X):
        """Linearised distance ``|g| / |grad g|`` to the nearest region boundary."""
        X = self._X(X)
        out = np.full(len(X), np.inf)
        for p in self.pieces:
            for g in p.region:
                v, dg = g.value_and_grad(X)
                n = np.linalg.norm(dg, axis=1)
                with np.errstate(all="ignore"):
                    d = np.where(n > 0, np.abs(v) / n, np.where(v == 0, 0.0, np.inf))
                d[~np.isfinite(n)] = 0.0
                np.minimum(out, d, out=out)
        return out

    def validate(self, box, grid_step, value_tol=1e-9, grad_tol=1e-6):
        """Check coverage, agreement on overlaps, declared gradients and the Lipschitz bound on a grid."""
        X = grid_points(box, grid_step)
        masks = self.region_masks(X)
        if not masks.any(axis=0).all():
            bad = X[np.flatnonzero(~masks.any(axis=0))[0]]
            raise InputError(f"grid point {bad.tolist()} is covered by no region")
        vals = np.full(len(X), np.nan)
        for k, p in enumerate(self.pieces):
            sel = masks[k]
            v = p.value(X[sel])
            prev = vals[sel]
            clash = np.isfinite(prev) & (np.abs(prev - v) > value_tol * np.maximum(1.0, np.abs(v)))
            if clash.any():
                raise InputError(f"pieces disagree at {X[sel][np.flatnonzero(clash)[0]].tolist()}")
            vals[sel] = np.where(np.isfinite(prev), prev, v)
        interior = self.seam_distance(X) > 10 * grid_step
        idx = self.piece_index(X)
        for k, p in enumerate(self.pieces):
            sel = interior & (idx == k)
            if p.gradient is None or not sel.any():
                continue
            Xs = X[sel]
            h = 1e-6 * np.maximum(1.0, np.linalg.norm(Xs, axis=1))
            for i, g in enumerate(p.gradient):
                E = np.zeros_like(Xs)
                E[:, i] = h
                fd = (p.value(Xs + E) - p.value(Xs - E)) / (2 * h)
                dec = g(Xs)
                err = np.abs(fd - dec) > grad_tol * np.maximum(1.0, np.abs(dec))
                if err.any():
                    raise InputError(f"declared gradient component {i} of piece {k} is wrong near {Xs[np.flatnonzero(err)[0]].tolist()}")
        G = self.gradient(X[interior])
        gmax = float(np.nanmax(np.linalg.norm(G, axis=1))) if len(G) else 0.0
        if gmax > self.lipschitz_bound * (1 + 1e-9):
            raise InputError(f"sampled gradient norm {gmax} exceeds lipschitz_bound {self.lipschitz_bound}")
        return True


@dataclass
class SubgradientConfig:
    radius_schedule: tuple = tuple(1e-2 * 0.5 ** np.arange(8))
    samples_per_radius: int = 64
    seam_margin: float = 0.1
    hull_tol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        r = np.asarray(self.radius_schedule, dtype=np.float64)
        if r.ndim != 1 or len(r) == 0 or (r <= 0).any() or (np.diff(r) >= 0).any():
            raise InputError("radius_schedule must be strictly decreasing and positive")
        self.radius_schedule = tuple(float(v) for v in r)
        if not self.seam_margin > 0 or not self.hull_tol > 0:
            raise InputError("seam_margin and hull_tol must be positive")

    def check_arity(self, m):
        if self.samples_per_radius < 2 * m + 2:
            raise InputError(f"samples_per_radius must be at least {2 * m + 2}")


@dataclass(eq=False)
class Polytope:
    """Convex hull of a minimal vertex list."""

    dim: int
    vertices: np.ndarray
    notes: dict = field(default_factory=dict)

    @classmethod
    def from_points(cls, points, hull_tol=1e-9):
        P = np.asarray(points, dtype=np.float64)
        if P.ndim != 2 or len(P) == 0:
            raise InputError("a polytope needs at least one point")
        return cls(P.shape[1], reduce_vertices(P, hull_tol))

    def __len__(self):
        return len(self.vertices)


def _affine_minimizer(A):
    """Weights ``mu`` (summing to 1) minimising ``|mu @ A|`` over the affine hull of the rows of ``A``."""
    k = len(A)
    M = np.zeros((k + 1, k + 1))
    M[:k, :k] = A @ A.T
    M[:k, k] = 1.0
    M[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return sol[:k]


def min_norm_point(P, tol=1e-12, max_iter=1000):
    """Point of smallest norm in the convex hull of ``P``'s vertices (Wolfe's algorithm).

    The active set never exceeds ``dim + 1`` affinely independent vertices.
    Stops when the duality gap ``|x|^2 - min_j <v_j, x>`` drops to ``tol``
    (scaled by the squared size of the polytope).  Returns ``(x, |x|)``.
    """
    V = P.vertices if isinstance(P, Polytope) else np.asarray(P, dtype=np.float64)
    if V.ndim != 2 or len(V) == 0:
        raise InputError("min_norm_point needs a nonempty polytope")
    scale = max(1.0, float((V * V).sum(axis=1).max()))
    eps = 1e-12
    S = [int(np.argmin((V * V).sum(axis=1)))]
    lam = np.array([1.0])
    x = V[S[0]].copy()
    gap = np.inf
    for _ in range(max_iter):
        dots = V @ x
        j = int(np.argmin(dots))
        gap = float(x @ x - dots[j])
        if gap <= tol * scale or j in S:
            return x, float(np.linalg.norm(x))
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            mu = _affine_minimizer(V[S])
            if (mu > eps).all():
                lam = mu
                break
            neg = mu <= eps
            theta = np.min(lam[neg] / (lam[neg] - mu[neg]))
            lam = lam + theta * (mu - lam)
            live = lam > eps
            S = [s for s, keep in zip(S, live) if keep]
            lam = lam[live] / lam[live].sum()
            if len(S) == 1:
                break
        x = lam @ V[S]
    raise ConvergenceError(f"minimum-norm iteration did not converge (gap {gap:.3e})", gap=gap)


def reduce_vertices(P, hull_tol=1e-9):
    """Drop duplicate points and points lying in the hull of the others."""
    P = np.asarray(P, dtype=np.float64)
    _, reps = _accel.greedy_cluster(P, hull_tol)
    V = P[np.sort(reps)]
    changed = True
    while changed and len(V) > 1:
        changed = False
        for i in range(len(V)):
            others = np.delete(V, i, axis=0)
            _, d = min_norm_point(others - V[i], tol=1e-15)
            if d <= hull_tol:
                V = others
                changed = True
                break
    return V


def _ball_samples(x, radii, n, rng):
    m = x.size
    dirs = rng.normal(size=(len(radii), n, m))
    dirs /= np.linalg.norm(dirs, axis=2, keepdims=True)
    rad = np.asarray(radii)[:, None] * rng.uniform(size=(len(radii), n)) ** (1.0 / m)
    return x + dirs * rad[:, :, None]


def gradient_limits(f, x, cfg=None):
    """Candidate limits of gradients at differentiability points tending to ``x``.

    Samples are drawn uniformly in ``B(x, r)`` for every radius of the
    schedule, kept when at least ``seam_margin * r`` away from every seam, and
    the tail of the schedule (its smaller half) is clustered by single
    linkage.  The linkage threshold is twice the largest nearest-neighbour
    gap between gradients of the same piece.  A cluster coming from piece
    ``p`` is represented by ``grad p(x)`` when that value sits inside the
    cluster (the piece gradient is continuous up to ``x``), by the cluster
    mean otherwise.
    """
    cfg = cfg or SubgradientConfig()
    cfg.check_arity(f.arity)
    x = as_point(x, f.arity)
    rng = np.random.default_rng(cfg.seed)
    radii = np.asarray(cfg.radius_schedule)
    tail = radii[len(radii) // 2:]
    Xs = _ball_samples(x, tail, cfg.samples_per_radius, rng)
    margins = (cfg.seam_margin * tail)[:, None] * np.ones((1, cfg.samples_per_radius))
    Xs = Xs.reshape(-1, f.arity)
    margins = margins.ravel()
    sd = f.seam_distance(Xs)
    labels = f.piece_index(Xs)
    ok = (sd >= margins) & (labels >= 0)
    smallest = np.zeros(len(ok), dtype=bool)
    smallest[-cfg.samples_per_radius:] = True
    if not (ok & smallest).any():
        raise NumericalError(f"no seam-free samples at radius {tail[-1]:.3g} around {x.tolist()}")
    Xs, labels = Xs[ok], labels[ok]
    G = np.empty_like(Xs)
    valid = np.ones(len(Xs), dtype=bool)
    for k in np.unique(labels):
        sel = labels == k
        G[sel], valid[sel] = f._piece_gradient(k, Xs[sel])
    Xs, labels, G = Xs[valid], labels[valid], G[valid]
    if len(G) == 0:
        raise NumericalError(f"no differentiable samples around {x.tolist()}")
    scale = 1.0 + float(np.abs(G).max())
    floor = max(cfg.hull_tol, 1e-12 * scale)
    thr = floor
    for k in np.unique(labels):
        Gk = G[labels == k]
        if len(Gk) > 1:
            nn = _nn_gaps(Gk)
            thr = max(thr, 2.0 * float(nn.max()))
    roots = single_linkage(G, thr)
    limits = []
    for root in np.unique(roots):
        members = roots == root
        for k in np.unique(labels[members]):
            Gc = G[members & (labels == k)]
            mean = Gc.mean(axis=0)
            spread = float(np.linalg.norm(Gc - mean, axis=1).max())
            exact, smooth_at_x = f._piece_gradient(k, x[None, :])
            exact = exact[0]
            if smooth_at_x[0] and np.isfinite(exact).all() and np.linalg.norm(exact - mean) <= spread + thr:
                limits.append(exact)
            else:
                limits.append(mean)
    limits = np.array(limits)
    _, reps = _accel.greedy_cluster(limits, floor)
    return limits[np.sort(reps)]


def _nn_gaps(G):
    d, _ = cKDTree(G).query(G, k=2)
    return d[:, 1]


def clarke_subgradient(f, x, cfg=None):
    """Clarke subgradient at ``x`` as a vertex-minimal :class:`Polytope`."""
    cfg = cfg or SubgradientConfig()
    L = gradient_limits(f, x, cfg)
    return Polytope(f.arity, reduce_vertices(L, cfg.hull_tol))


def min_norm_subgradients(f, X, cfg=None):
    """``h(x) = min{|l| : l in subgradient at x}`` for every row of ``X``.

    Points farther from every seam than the largest sampling radius, in a
    piece with a smooth gradient, have a singleton subgradient and are
    evaluated in closed form; the rest go through :func:`clarke_subgradient`.
    """
    cfg = cfg or SubgradientConfig()
    X = f._X(X)
    h = np.empty(len(X))
    idx = f.piece_index(X)
    if (idx < 0).any():
        raise InputError(f"point {X[np.flatnonzero(idx < 0)[0]].tolist()} lies in no region")
    fast = (f.seam_distance(X) > cfg.radius_schedule[0]) & f._smooth[idx]
    for k in np.unique(idx[fast]):
        sel = fast & (idx == k)
        h[sel] = np.linalg.norm(f.piece_gradient(k, X[sel]), axis=1)
    for i in np.flatnonzero(~fast):
        h[i] = min_norm_point(clarke_subgradient(f, X[i], cfg), tol=1e-15)[1]
    return h


def _grid(window, grid_step, m):
    box = np.asarray(window, dtype=np.float64)
    if box.ndim == 0:
        box = np.array([[-float(window), float(window)]] * m)
    return grid_points(box, grid_step, anchor=np.zeros(m)), box


def critical_set_sample(f, window, grid_step, cfg=None):
    """Grid points where the subgradient contains 0 (minimum norm within ``3 * hull_tol``)."""
    cfg = cfg or SubgradientConfig()
    X, box = _grid(window, grid_step, f.arity)
    h = min_norm_subgradients(f, X, cfg)
    R = float(np.linalg.norm(np.abs(box).max(axis=1)))
    return PointCloud(f.arity, X[h <= 3 * cfg.hull_tol], grid_step * np.sqrt(f.arity), R)


def subgradient_graph(f, X, cfg=None, edge_samples=8):
    """Sampled graph of ``x -> subgradient at x`` over the rows of ``X``.

    Each value contributes its vertices and points along the segments
    between consecutive vertices.
    """
    cfg = cfg or SubgradientConfig()
    X = f._X(X)
    rows = []
    spacing = 0.0
    for x in X:
        V = clarke_subgradient(f, x, cfg).vertices
        pts = [V]
        if len(V) > 1:
            w = np.linspace(0, 1, edge_samples + 2)[1:-1, None]
            for a, b in zip(V, np.roll(V, -1, axis=0)):
                pts.append(a + w * (b - a))
                spacing = max(spacing, float(np.linalg.norm(b - a)) / (edge_samples + 1))
        Y = np.vstack(pts)
        rows.append(np.hstack([np.repeat(x[None, :], len(Y), axis=0), Y]))
    G = np.vstack(rows)
    if len(X) > 1:
        d = _nn_gaps(X)
        res = max(float(np.median(d)), spacing)
    else:
        res = max(spacing, 1e-9)
    R = float(np.linalg.norm(G, axis=1).max()) or 1.0
    return MultifunctionGraph(f.arity, f.arity, PointCloud(2 * f.arity, G, res, R))


__all__ = [
    "Piece",
    "PiecewiseFn",
    "SubgradientConfig",
    "Polytope",
    "gradient_limits",
    "clarke_subgradient",
    "min_norm_point",
    "min_norm_subgradients",
    "reduce_vertices",
    "critical_set_sample",
    "subgradient_graph",
]
