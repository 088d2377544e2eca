"""Empirical estimates of Łojasiewicz-type exponents.

Every estimator reduces to pairs ``(u, v)`` for which an inequality
``v >= C u**l`` is expected near a base point, and fits the lower envelope
of the pairs in log-log coordinates (:func:`fit_envelope`).
"""

import numpy as np

from . import _accel
from .core_sets import ImplicitSetSpec, PointCloud, as_point, grid_points, level_band, project_to_zero_set, sample
from .errors import FitError, InputError, NumericalError
from .expr import ExprFn, parse_expr
from .fits import ExponentFit, fit_envelope, fit_power_law
from .subgradients import PiecewiseFn, SubgradientConfig, min_norm_subgradients

# fraction of the window radius bounding the fitted neighbourhood
R_MAX_FRACTION = 0.3
# lower cutoff of the fitted neighbourhood, in grid steps
R_MIN_STEPS = 10
# distances below this many grid steps are sampling noise
EXCLUSION_STEPS = 3
# tolerated disagreement between the two 1-d gradient-exponent estimates
ONE_DIM_AGREEMENT = 0.05


def _box(window, center):
    w = np.asarray(window, dtype=np.float64)
    if w.ndim == 0:
        if not w > 0:
            raise InputError("window half-width must be positive")
        return np.stack([center - float(w), center + float(w)], axis=1)
    if w.shape != (len(center), 2):
        raise InputError(f"window must be a half-width or {len(center)} [lo, hi] pairs")
    return w


def _as_map(f, arity=None):
    """Normalise ``f`` to ``(callable X -> (N, k) values, arity, equalities or None)``."""
    if isinstance(f, PiecewiseFn):
        return (lambda X: f(X)[:, None]), f.arity, None
    if isinstance(f, ExprFn):
        f = [f]
    if isinstance(f, (list, tuple)) and f and all(isinstance(g, ExprFn) for g in f):
        m = f[0].arity
        if any(g.arity != m for g in f):
            raise InputError("component functions must share one arity")
        return (lambda X: np.stack([g(X) for g in f], axis=1)), m, list(f)
    if arity is None:
        raise InputError("pass an ExprFn, a list of ExprFn or a PiecewiseFn")
    return _as_map(parse_expr(f, arity))


def _level_set(f, comps, X, fa, grid_step, a):
    """Sample of ``{x : f(x) = f(a)}`` from the grid ``X``."""
    half_cell = 0.5 * grid_step * np.sqrt(X.shape[1])
    if comps is not None:
        eqs = [g.shifted(c) for g, c in zip(comps, fa)]
        band = X[level_band(eqs, X, 1e-12, half_cell)]
        P, res = project_to_zero_set(eqs, band)
        L = P[res <= 1e-9]
    else:
        v = f(X) - fa[0]
        g = np.linalg.norm(f.gradient(X), axis=1)
        with np.errstate(all="ignore"):
            lin = np.where(g > 0, np.abs(v) / g, np.where(v == 0, 0.0, np.inf))
        L = X[lin <= half_cell]
    return np.vstack([L, a[None, :]])


def loj_function_exponent(f, a, window, grid_step, bins=12, r_min=None, r_max=None, arity=None):
    """Exponent ``l`` in ``|f(x) - f(a)| >= C d(x, f^-1(f(a)))**l`` near ``a``.

    ``f`` is an :class:`ExprFn`, a list of them (a vector map, compared in
    the Euclidean norm) or a :class:`PiecewiseFn`.  The grid is anchored at
    ``a``; samples with ``r_min <= |x - a| <= r_max`` and level-set distance
    at least three grid steps enter the envelope fit.
    """
    fun, m, comps = _as_map(f, arity)
    a = as_point(a, m)
    box = _box(window, a)
    X = grid_points(box, grid_step, anchor=a)
    fa = fun(a[None, :])[0]
    V = np.linalg.norm(fun(X) - fa, axis=1)
    if V.max() <= 1e-14 * max(1.0, np.abs(fa).max()):
        raise FitError("f is constant on the window")
    L = _level_set(f if comps is None else None, comps, X, fa, grid_step, a)
    U = _accel.min_dist(X, L)
    half = 0.5 * float((box[:, 1] - box[:, 0]).min())
    r_max = R_MAX_FRACTION * half if r_max is None else float(r_max)
    r_min = R_MIN_STEPS * grid_step if r_min is None else float(r_min)
    ra = np.linalg.norm(X - a, axis=1)
    keep = (ra >= r_min) & (ra <= r_max) & (U >= EXCLUSION_STEPS * grid_step) & (V > 0)
    if not keep.any():
        raise FitError("no samples left in the fitting window")
    fit = fit_envelope(U[keep], V[keep], bins)
    fit.notes.update({"kind": "loj", "r_min": float(r_min), "r_max": float(r_max), "level_set_size": int(len(L))})
    return fit


def sample_intersection(X_spec, Y_spec, grid_step):
    """Sample ``X ∩ Y`` for two implicit sets by projecting onto both sets of equalities at once."""
    if X_spec.dim != Y_spec.dim:
        raise InputError("X and Y live in different dimensions")
    box = np.stack([np.maximum(X_spec.box[:, 0], Y_spec.box[:, 0]), np.minimum(X_spec.box[:, 1], Y_spec.box[:, 1])], axis=1)
    if (box[:, 1] <= box[:, 0]).any():
        return PointCloud.empty(X_spec.dim, grid_step * np.sqrt(X_spec.dim), max(X_spec.window_radius, Y_spec.window_radius))
    both = ImplicitSetSpec(
        X_spec.dim,
        [e.tree for e in X_spec.equalities + Y_spec.equalities],
        [g.tree for g in X_spec.inequalities + Y_spec.inequalities],
        box,
        min(X_spec.equality_tolerance, Y_spec.equality_tolerance),
    )
    return sample(both, grid_step)


def separation_exponent(X, Y, a, window=None, bins=12, r_min=None, r_max=None, grid_step=None, intersection=None):
    """Exponent ``l`` in ``d(x, Y) >= C d(x, X ∩ Y)**l`` for ``x`` in ``X`` near ``a``.

    ``X`` and ``Y`` are point clouds or implicit sets (sampled with
    ``grid_step``).  For two implicit sets the intersection is sampled from
    the joint system of equalities; otherwise it is the points of ``X``
    within twice the coarser resolution of ``Y``, unless an explicit
    ``intersection`` cloud is passed.  The tolerance version widens a
    tangential contact to a band of width about ``sqrt(resolution)``.
    """
    if isinstance(X, ImplicitSetSpec) and isinstance(Y, ImplicitSetSpec) and intersection is None:
        if grid_step is None:
            raise InputError("grid_step is required for implicit sets")
        intersection = sample_intersection(X, Y, grid_step)
    if isinstance(X, ImplicitSetSpec) or isinstance(Y, ImplicitSetSpec):
        if grid_step is None:
            raise InputError("grid_step is required for implicit sets")
        X = sample(X, grid_step) if isinstance(X, ImplicitSetSpec) else X
        Y = sample(Y, grid_step) if isinstance(Y, ImplicitSetSpec) else Y
    if X.dim != Y.dim:
        raise InputError("X and Y live in different dimensions")
    a = as_point(a, X.dim)
    res = max(X.resolution, Y.resolution)
    step = res / np.sqrt(X.dim)
    dY = _accel.min_dist(X.points, Y.points)
    inter = X.points[dY <= 2 * res] if intersection is None else np.asarray(intersection.points)
    if len(inter) == 0:
        raise FitError("sampled intersection of X and Y is empty")
    if _accel.min_dist(a[None, :], inter)[0] > res:
        raise InputError(f"{a.tolist()} is not in the sampled intersection")
    window = X.window_radius if window is None else float(window)
    r_max = R_MAX_FRACTION * window if r_max is None else float(r_max)
    r_min = R_MIN_STEPS * step if r_min is None else float(r_min)
    ra = np.linalg.norm(X.points - a, axis=1)
    near = ra <= r_max
    if not (dY[near] > 3 * res).any():
        raise FitError("X lies inside Y near a (a is interior to the intersection)")
    U = _accel.min_dist(X.points, inter)
    keep = near & (ra >= r_min) & (U >= EXCLUSION_STEPS * step) & (dY > 0)
    fit = fit_envelope(U[keep], dY[keep], bins)
    fit.notes.update({"kind": "separation", "r_min": float(r_min), "r_max": float(r_max), "intersection_size": int(len(inter))})
    return fit


def subgradient_exponent(f, window, grid_step, cfg=None, bins=12, r_max=None, require_critical=True):
    """Exponent ``theta`` in ``h(x) >= c |f(x)|**theta`` near 0, ``h`` the minimum-norm subgradient.

    With ``require_critical`` the assumption that the subgradient at 0 is
    ``{0}`` is checked first.  A fitted exponent outside ``(0, 1)`` is
    reported in ``notes`` rather than raised.
    """
    cfg = cfg or SubgradientConfig()
    m = f.arity
    origin = np.zeros(m)
    f0 = float(f(origin[None, :])[0])
    h0 = float(min_norm_subgradients(f, origin[None, :], cfg)[0])
    if require_critical and (abs(f0) > 1e-12 or h0 > 3 * cfg.hull_tol):
        raise InputError(f"0 is not a critical zero of f: f(0) = {f0:.3g}, h(0) = {h0:.3g}")
    box = _box(window, origin)
    X = grid_points(box, grid_step, anchor=origin)
    half = 0.5 * float((box[:, 1] - box[:, 0]).min())
    r_max = R_MAX_FRACTION * half if r_max is None else float(r_max)
    X = X[np.linalg.norm(X, axis=1) <= r_max]
    U = np.abs(f(X))
    X, U = X[U > 0], U[U > 0]
    if len(X) == 0:
        raise FitError("f vanishes on the whole window")
    H = min_norm_subgradients(f, X, cfg)
    keep = H > 0
    fit = fit_envelope(U[keep], H[keep], bins)
    theta = fit.exponent
    fit.notes.update({
        "kind": "subgradient",
        "r_max": r_max,
        "h_at_origin": h0,
        "theta_in_unit_interval": bool(0 < theta < 1),
        "boundary": bool(abs(theta) <= 0.02 or abs(theta - 1) <= 0.02),
        "critical_samples_dropped": int((~keep).sum()),
    })
    return fit


def phi_profile(f, ball_radius, t_grid, cfg=None, grid_step=None, level_tol=0.05):
    """``phi(t) = min{h(x) : |x| <= ball_radius, |f(x)| = t}`` on a grid of levels.

    The level set is the shell ``| |f(x)| - t | <= level_tol * t`` of grid
    points.  Returns a dict with ``t``, ``phi`` (``None`` where the shell is
    empty), per-level ``errors`` and ``monotone`` / ``vanishing``
    diagnostics.
    """
    cfg = cfg or SubgradientConfig()
    t = np.asarray(t_grid, dtype=np.float64)
    if t.ndim != 1 or len(t) == 0 or (t <= 0).any() or (np.diff(t) <= 0).any():
        raise InputError("t_grid must be increasing positive levels")
    if not ball_radius > 0:
        raise InputError("ball_radius must be positive")
    m = f.arity
    step = ball_radius / 200 if grid_step is None else float(grid_step)
    X = grid_points(_box(ball_radius, np.zeros(m)), step, anchor=np.zeros(m))
    X = X[np.linalg.norm(X, axis=1) <= ball_radius]
    F = np.abs(f(X))
    shell_any = np.zeros(len(X), dtype=bool)
    shells = []
    for ti in t:
        s = np.abs(F - ti) <= level_tol * ti
        shells.append(s)
        shell_any |= s
    H = np.full(len(X), np.nan)
    H[shell_any] = min_norm_subgradients(f, X[shell_any], cfg)
    phi, errors = [], []
    for ti, s in zip(t, shells):
        if s.any():
            phi.append(float(H[s].min()))
            errors.append(None)
        else:
            phi.append(None)
            errors.append(f"no samples with |f| within {level_tol:.0%} of {ti:.6g} (max |f| = {F.max():.6g})")
    vals = np.array([np.nan if p is None else p for p in phi])
    ok = np.isfinite(vals)
    monotone = bool((np.diff(vals[ok]) >= 0).all()) if ok.sum() > 1 else None
    slope = None
    if ok.sum() >= 2 and (vals[ok] > 0).all():
        slope = fit_power_law(t[ok], vals[ok]).exponent
    return {
        "t": t.tolist(),
        "phi": phi,
        "errors": errors,
        "monotone": monotone,
        "log_slope": slope,
        "vanishing": None if slope is None else bool(slope > 0),
    }


def one_dim_gradient_exponent(phi, t_window, samples=400, bins=12):
    """Gradient exponent ``theta`` with ``|phi'(t)| >= c |phi(t)|**theta`` as ``t -> 0+``.

    ``phi`` is an arity-1 :class:`ExprFn` or a sampled profile ``(t, phi)``.
    The leading exponent ``alpha`` of ``phi ~ t**alpha`` gives
    ``theta = max(0, (alpha - 1) / alpha)``; an envelope fit of
    ``(|phi|, |phi'|)`` with finite-difference derivatives must agree with
    ``(alpha - 1) / alpha`` to within 0.05.
    """
    lo, hi = (float(v) for v in t_window)
    if not 0 < lo < hi:
        raise InputError("t_window must satisfy 0 < t_min < t_max")
    if isinstance(phi, ExprFn):
        if phi.arity != 1:
            raise InputError("phi must be a function of one variable")
        t = np.geomspace(lo, hi, samples)
        p = phi(t[:, None])
    else:
        t, p = (np.asarray(v, dtype=np.float64) for v in phi)
        sel = (t >= lo) & (t <= hi)
        t, p = t[sel], p[sel]
        order = np.argsort(t)
        t, p = t[order], p[order]
    if len(t) < 3 * bins:
        raise FitError(f"need at least {3 * bins} profile samples in the window")
    if not (p > 0).all():
        raise NumericalError("phi must be positive on the window")
    alpha = fit_power_law(t, p).exponent
    if alpha <= 0:
        raise NumericalError(f"phi does not vanish at 0 (leading exponent {alpha:.3g})")
    raw = (alpha - 1) / alpha
    theta = max(0.0, raw)
    dp = np.abs(np.gradient(p, t))
    env = fit_envelope(p[dp > 0], dp[dp > 0], bins)
    if abs(env.exponent - raw) > ONE_DIM_AGREEMENT:
        raise NumericalError(
            f"power-law estimate {raw:.4f} and envelope estimate {env.exponent:.4f} disagree"
        )
    fit = ExponentFit(
        exponent=theta,
        constant=env.constant,
        window=(lo, hi),
        bins=bins,
        max_residual=env.max_residual,
        envelope=env.envelope,
        notes={"kind": "one_dim", "alpha": alpha, "theta_envelope": env.exponent},
        samples=env.samples,
    )
    return fit


__all__ = [
    "ExponentFit",
    "fit_envelope",
    "loj_function_exponent",
    "separation_exponent",
    "sample_intersection",
    "subgradient_exponent",
    "phi_profile",
    "one_dim_gradient_exponent",
]
