"""``tamegeo`` command-line interface.

JSON results go to standard output, diagnostics to standard error.  Exit
status: 0 on success, 2 for invalid input, 3 for numerical failure.  The
result is serialised in full before anything is printed, so a failing run
never leaves partial JSON behind.

Points are comma-separated coordinates (``--at 0,3``); write negative
values as ``--at=-1,0`` so they are not mistaken for options.
"""

import argparse
import csv
import sys

import numpy as np

from . import __version__, io
from .core_sets import ImplicitSetSpec, PointCloud, sample
from .errors import InputError, NumericalError, TameGeoError
from .expr import ExprFn
from .exponents import (
    loj_function_exponent,
    one_dim_gradient_exponent,
    phi_profile,
    separation_exponent,
    subgradient_exponent,
)
from .metrics import hausdorff, kuratowski_dist, resolution_bound
from .multifunctions import (
    PREIMAGE_MODES,
    MultifunctionGraph,
    default_radii,
    delta,
    domain,
    kuratowski_liminf,
    kuratowski_limsup,
    pre_image,
    section,
)
from .subgradients import (
    PiecewiseFn,
    SubgradientConfig,
    clarke_subgradient,
    critical_set_sample,
    min_norm_point,
)
from .tangent_cones import DEFAULT_GAMMA, DEFAULT_STEPS, DEFAULT_T0, conic_exponent, tangent_cone

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

ENVELOPE_COLUMNS = ("log_u", "log_v", "bin", "is_min")
DRIFT_COLUMNS = ("k", "t", "count", "drift", "resolution_limited", "window_limited")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def _floats(text):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse numbers from {text!r}") from exc
    if not vals:
        raise InputError(f"no numbers in {text!r}")
    return vals


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _point_list(text):
    return [_floats(p) for p in str(text).split(";") if p.strip()]


def _window(text):
    vals = _floats(text)
    if len(vals) == 1:
        return vals[0]
    if len(vals) % 2:
        raise InputError("a box window needs lo,hi pairs")
    return np.array(vals).reshape(-1, 2)


def _cfg(args):
    return SubgradientConfig(
        samples_per_radius=args.samples_per_radius,
        seam_margin=args.seam_margin,
        hull_tol=args.hull_tol,
        seed=args.seed,
    )


def _expect(obj, cls, path):
    if not isinstance(obj, cls):
        raise InputError(f"{path}: expected a {cls.__name__} document")
    return obj


def _write_csv(path, header, rows):
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise InputError(f"{path}: cannot write CSV ({exc.strerror or exc})") from exc


def _fit_csv(path, fit):
    s = fit.samples
    if s is not None:
        rows = [(format(a, ".17g"), format(b, ".17g"), int(k), int(m)) for a, b, k, m in zip(s["log_u"], s["log_v"], s["bin"], s["is_min"])]
    else:
        rows = [(format(a, ".17g"), format(b, ".17g"), k, 1) for k, (a, b) in enumerate(fit.envelope)]
    _write_csv(path, ENVELOPE_COLUMNS, rows)


def _cloud_result(A, **extra):
    out = io.cloud_to_json(A)
    out["size"] = len(A)
    out.update(extra)
    return out


# --- subcommands ---------------------------------------------------------

def cmd_sample(args):
    spec = _expect(io.load(args.spec), ImplicitSetSpec, args.spec)
    return _cloud_result(sample(spec, args.grid_step, args.seed))


def _pair(args):
    A = io.load_cloud(args.A, args.grid_step, args.seed)
    B = io.load_cloud(args.B, args.grid_step, args.seed)
    return A, B


def cmd_hausdorff(args):
    A, B = _pair(args)
    return {"value": hausdorff(A, B), "resolution_bound": resolution_bound(A, B)}


def cmd_kuratowski(args):
    A, B = _pair(args)
    return {"value": kuratowski_dist(A, B), "resolution_bound": resolution_bound(A, B)}


def _graph(args):
    return _expect(io.load(args.F, args.grid_step), MultifunctionGraph, args.F)


def cmd_section(args):
    S = section(_graph(args), _floats(args.at))
    return _cloud_result(S, truncated=S.truncated)


def cmd_domain(args):
    return _cloud_result(domain(_graph(args)))


def cmd_preimage(args):
    return _cloud_result(pre_image(_graph(args), _floats(args.at), args.mode, args.tol))


def cmd_klim(args):
    F = _graph(args)
    radii = None
    if args.radii:
        radii = _floats(args.radii)
    elif args.r0 is not None:
        radii = default_radii(F, args.r0, args.count)
    op = kuratowski_limsup if args.mode == "sup" else kuratowski_liminf
    L = op(F, _floats(args.at), radii, args.tol)
    return _cloud_result(L.points, truncated=L.truncated, radius=L.radius)


def cmd_delta(args):
    F = _graph(args)
    return {"value": delta(F, _floats(args.at), _floats(args.y))}


def _cone(args, E, a):
    return tangent_cone(E, a, args.t0, args.gamma, args.steps, args.cluster_tol)


def cmd_cone(args):
    E = io.load_cloud(args.E, args.grid_step, args.seed)
    V = _cone(args, E, _floats(args.at))
    if args.csv:
        _write_csv(args.csv, DRIFT_COLUMNS, [
            (k, format(s.t, ".17g"), s.count, format(s.drift, ".17g"), int(s.resolution_limited), int(s.window_limited))
            for k, s in enumerate(V.steps)
        ])
    return {
        "status": V.status,
        "directions": V.directions,
        "cluster_tol": V.cluster_tol,
        "steps": [vars(s) for s in V.steps],
    }


def _conic(args, E):
    radii = _floats(args.radii)
    return conic_exponent(E, radii, t0=args.t0, gamma=args.gamma, steps=args.steps, cluster_tol=args.cluster_tol)


def cmd_conic_exponent(args):
    fit = _conic(args, io.load_cloud(args.E, args.grid_step, args.seed))
    if args.csv:
        _fit_csv(args.csv, fit)
    return fit.to_dict()


def cmd_nearest(args):
    from .tangent_cones import nearest_point_multifunction

    M = io.load_cloud(args.M, args.grid_step, args.seed)
    return io.graph_to_json(nearest_point_multifunction(M, _point_list(args.xs), args.tol))


def _piecewise(path):
    f = io.load(path)
    if isinstance(f, ExprFn):
        raise InputError(f"{path}: expected a piecewise_function document")
    return _expect(f, PiecewiseFn, path)


def cmd_subgradient(args):
    f = _piecewise(args.f)
    P = clarke_subgradient(f, _floats(args.at), _cfg(args))
    x, h = min_norm_point(P)
    return {"vertices": P.vertices, "min_norm_point": x, "h": h}


def cmd_critical_set(args):
    f = _piecewise(args.f)
    return _cloud_result(critical_set_sample(f, _window(args.window), args.grid_step, _cfg(args)))


def _need_inputs(args, k, usage):
    if len(args.inputs) != k:
        raise InputError(f"--mode {args.mode} takes {usage}")
    return args.inputs


def cmd_exponent(args):
    mode = args.mode
    if mode == "loj":
        (path,) = _need_inputs(args, 1, "one function file")
        if args.at is None or args.window is None or args.grid_step is None:
            raise InputError("--mode loj needs --at, --window and --grid-step")
        f = io.load(path)
        if not isinstance(f, (ExprFn, PiecewiseFn)):
            raise InputError(f"{path}: expected an expr or piecewise_function document")
        fit = loj_function_exponent(f, _floats(args.at), _window(args.window), args.grid_step, args.bins)
    elif mode == "sep":
        px, py = _need_inputs(args, 2, "two set files")
        if args.at is None:
            raise InputError("--mode sep needs --at")
        X, Y = io.load(px), io.load(py)
        for obj, p in ((X, px), (Y, py)):
            if not isinstance(obj, (PointCloud, ImplicitSetSpec)):
                raise InputError(f"{p}: expected a point_cloud or implicit_set")
        window = None if args.window is None else float(_floats(args.window)[0])
        fit = separation_exponent(X, Y, _floats(args.at), window, args.bins, grid_step=args.grid_step)
    elif mode == "subgrad":
        (path,) = _need_inputs(args, 1, "one piecewise_function file")
        if args.window is None or args.grid_step is None:
            raise InputError("--mode subgrad needs --window and --grid-step")
        fit = subgradient_exponent(_piecewise(path), _window(args.window), args.grid_step, _cfg(args), args.bins,
                                   require_critical=not args.allow_noncritical)
    elif mode == "conic":
        (path,) = _need_inputs(args, 1, "one set file")
        if args.radii is None:
            raise InputError("--mode conic needs --radii")
        fit = _conic(args, io.load_cloud(path, args.grid_step, args.seed))
    else:
        (path,) = _need_inputs(args, 1, "one expr file of arity 1")
        if args.t_window is None:
            raise InputError("--mode onedim needs --t-window lo,hi")
        phi = _expect(io.load(path), ExprFn, path)
        tw = _floats(args.t_window)
        if len(tw) != 2:
            raise InputError("--t-window takes lo,hi")
        fit = one_dim_gradient_exponent(phi, tw, bins=args.bins)
    if args.csv:
        _fit_csv(args.csv, fit)
    return fit.to_dict()


def cmd_phi_profile(args):
    f = _piecewise(args.f)
    return phi_profile(f, args.ball_radius, _floats(args.t_grid), _cfg(args), args.grid_step, args.level_tol)


# --- parser ---------------------------------------------------------------

def _add_subgrad_flags(p):
    p.add_argument("--samples-per-radius", type=int, default=64)
    p.add_argument("--seam-margin", type=_positive, default=0.1)
    p.add_argument("--hull-tol", type=_positive, default=1e-9)


def _add_cone_flags(p):
    p.add_argument("--t0", type=_positive, default=DEFAULT_T0)
    p.add_argument("--gamma", type=_positive, default=DEFAULT_GAMMA)
    p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
    p.add_argument("--cluster-tol", type=_positive, default=None)


def build_parser():
    top = _Parser(prog="tamegeo", description="Numerical tame geometry: set distances, multifunctions, tangent cones, subgradients, exponents.")
    top.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    common.add_argument("--grid-step", type=_positive, default=None, help="sampling step for implicit sets")
    sub = top.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        p.set_defaults(func=fn)
        return p

    p = add("sample", cmd_sample, "sample an implicit set on a grid")
    p.add_argument("spec")

    for name, fn in (("hausdorff", cmd_hausdorff), ("kuratowski", cmd_kuratowski)):
        p = add(name, fn, f"{name} distance between two sets")
        p.add_argument("A")
        p.add_argument("B")

    p = add("section", cmd_section, "value F(x) of a multifunction")
    p.add_argument("F")
    p.add_argument("--at", required=True)

    p = add("domain", cmd_domain, "domain of a multifunction")
    p.add_argument("F")

    p = add("preimage", cmd_preimage, "pre-images of a multifunction")
    p.add_argument("F")
    p.add_argument("--mode", choices=PREIMAGE_MODES, default="strong")
    p.add_argument("--at", required=True)
    p.add_argument("--tol", type=_positive, default=None)

    p = add("klim", cmd_klim, "Kuratowski upper/lower limit of a multifunction at a point")
    p.add_argument("F")
    p.add_argument("--at", required=True)
    p.add_argument("--mode", choices=("sup", "inf"), default="sup")
    p.add_argument("--radii", default=None, help="comma-separated decreasing radii")
    p.add_argument("--r0", type=_positive, default=None)
    p.add_argument("--count", type=int, default=11)
    p.add_argument("--tol", type=_positive, default=None)

    p = add("delta", cmd_delta, "distance d(y, F(x))")
    p.add_argument("F")
    p.add_argument("--at", required=True)
    p.add_argument("--y", required=True)

    p = add("cone", cmd_cone, "tangent cone of a set at a point")
    p.add_argument("E")
    p.add_argument("--at", required=True)
    p.add_argument("--csv", default=None, help="write per-step drift diagnostics")
    _add_cone_flags(p)

    p = add("conic-exponent", cmd_conic_exponent, "exponent of the distance between a set and its tangent cone at 0")
    p.add_argument("E")
    p.add_argument("--radii", required=True)
    p.add_argument("--csv", default=None)
    _add_cone_flags(p)

    p = add("nearest", cmd_nearest, "graph of the nearest-point map of a set")
    p.add_argument("M")
    p.add_argument("--xs", required=True, help="points separated by ';'")
    p.add_argument("--tol", type=_positive, default=None)

    p = add("subgradient", cmd_subgradient, "Clarke subgradient and its minimum-norm element")
    p.add_argument("f")
    p.add_argument("--at", required=True)
    _add_subgrad_flags(p)

    p = add("critical-set", cmd_critical_set, "grid sample of the Clarke critical set")
    p.add_argument("f")
    p.add_argument("--window", required=True, help="half-width or lo,hi pairs")
    _add_subgrad_flags(p)

    p = add("exponent", cmd_exponent, "estimate an exponent (loj, sep, subgrad, conic, onedim)")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--mode", choices=("loj", "sep", "subgrad", "conic", "onedim"), required=True)
    p.add_argument("--at", default=None)
    p.add_argument("--window", default=None)
    p.add_argument("--bins", type=int, default=12)
    p.add_argument("--radii", default=None)
    p.add_argument("--t-window", default=None)
    p.add_argument("--allow-noncritical", action="store_true", help="skip the check that the subgradient at 0 is {0}")
    p.add_argument("--csv", default=None, help="write log_u, log_v, bin, is_min")
    _add_cone_flags(p)
    _add_subgrad_flags(p)

    p = add("phi-profile", cmd_phi_profile, "profile of the minimum-norm subgradient over level sets")
    p.add_argument("f")
    p.add_argument("--ball-radius", type=_positive, required=True)
    p.add_argument("--t-grid", required=True)
    p.add_argument("--level-tol", type=_positive, default=0.05)
    _add_subgrad_flags(p)
    return top


def run(argv=None, stdout=None, stderr=None):
    """Execute one command; returns ``(exit_status, json_text or None)``."""
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_INPUT if exc.code else EXIT_OK), None
    try:
        text = io.dumps(args.func(args))
    except InputError as exc:
        stderr.write(f"tamegeo {args.command}: input error: {exc}\n")
        return EXIT_INPUT, None
    except NumericalError as exc:
        stderr.write(f"tamegeo {args.command}: numerical failure: {exc}\n")
        return EXIT_NUMERIC, None
    except TameGeoError as exc:
        stderr.write(f"tamegeo {args.command}: {exc}\n")
        return EXIT_NUMERIC, None
    stdout.write(text + "\n")
    return EXIT_OK, text


def main(argv=None):
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
