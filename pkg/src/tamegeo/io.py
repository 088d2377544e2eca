"""JSON encoding and decoding of the package's objects.

Every document carries a ``kind``: ``implicit_set``, ``point_cloud``,
``multifunction_graph``, ``piecewise_function`` or ``expr``.  Output is
written with floats at 17 significant digits so that repeated runs are
byte-identical; non-finite floats become the strings ``"inf"``,
``"-inf"`` and ``"nan"``.
"""

import json
import math

import numpy as np

from .core_sets import ImplicitSetSpec, PointCloud, sample
from .errors import InputError
from .expr import parse_expr
from .multifunctions import MultifunctionGraph
from .subgradients import PiecewiseFn

KINDS = ("implicit_set", "point_cloud", "multifunction_graph", "piecewise_function", "expr")


def load_json(path):
    """Read a JSON file, turning I/O and syntax problems into :class:`InputError`."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror or exc})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno} (char {exc.pos}): {exc.msg}") from exc


def _need(obj, key, kind):
    if key not in obj:
        raise InputError(f"{kind} document is missing {key!r}")
    return obj[key]


def decode(obj, grid_step=None):
    try:
        return _decode(obj, grid_step)
    except InputError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise InputError(f"malformed {obj.get('kind', 'document') if isinstance(obj, dict) else 'document'}: {exc}") from exc


def _decode(obj, grid_step=None):
    """Build the object described by a parsed JSON document.

    ``grid_step`` is only used when a multifunction graph is given as an
    implicit set (it may also be stored in the document as ``grid_step``).
    """
    if not isinstance(obj, dict):
        raise InputError("a document must be a JSON object with a 'kind'")
    kind = obj.get("kind")
    if kind == "point_cloud":
        dim = int(_need(obj, "dim", kind))
        pts = np.asarray(_need(obj, "points", kind), dtype=np.float64).reshape(-1, dim)
        return PointCloud(dim, pts, float(_need(obj, "resolution", kind)), float(_need(obj, "window_radius", kind)))
    if kind == "implicit_set":
        return ImplicitSetSpec(
            int(_need(obj, "dim", kind)),
            obj.get("equalities", []),
            obj.get("inequalities", []),
            _need(obj, "box", kind),
            float(obj.get("equality_tolerance", 1e-6)),
        )
    if kind == "multifunction_graph":
        m, n = int(_need(obj, "m", kind)), int(_need(obj, "n", kind))
        g = _decode(_need(obj, "graph", kind))
        if isinstance(g, ImplicitSetSpec):
            step = obj.get("grid_step", grid_step)
            if step is None:
                raise InputError("an implicit graph needs grid_step (in the document or via --grid-step)")
            g = sample(g, float(step))
        if not isinstance(g, PointCloud):
            raise InputError("graph must be a point_cloud or implicit_set")
        slab = obj.get("slab")
        return MultifunctionGraph(m, n, g, None if slab is None else float(slab))
    if kind == "piecewise_function":
        return PiecewiseFn(int(_need(obj, "arity", kind)), _need(obj, "pieces", kind), float(_need(obj, "lipschitz_bound", kind)))
    if kind == "expr":
        return parse_expr(_need(obj, "tree", kind), int(_need(obj, "arity", kind)))
    raise InputError(f"unknown document kind {kind!r}; expected one of {', '.join(KINDS)}")


def load(path, grid_step=None):
    return decode(load_json(path), grid_step)


def load_cloud(path, grid_step=None, seed=0):
    """Load a point cloud, sampling an implicit set with ``grid_step`` if needed."""
    obj = load(path, grid_step)
    if isinstance(obj, ImplicitSetSpec):
        if grid_step is None:
            raise InputError(f"{path}: an implicit set needs --grid-step")
        obj = sample(obj, grid_step, seed)
    if not isinstance(obj, PointCloud):
        raise InputError(f"{path}: expected a point_cloud or implicit_set")
    return obj


def cloud_to_json(A):
    return {
        "kind": "point_cloud",
        "dim": A.dim,
        "resolution": A.resolution,
        "window_radius": A.window_radius,
        "points": A.points,
    }


def graph_to_json(F):
    return {"kind": "multifunction_graph", "m": F.m, "n": F.n, "slab": F.slab, "graph": cloud_to_json(F.graph)}


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    return x


def _emit(x, out):
    if x is None:
        out.append("null")
    elif isinstance(x, bool):
        out.append("true" if x else "false")
    elif isinstance(x, int):
        out.append(str(x))
    elif isinstance(x, float):
        if math.isfinite(x):
            out.append(format(x + 0.0, ".17g"))  # + 0.0 folds -0.0 into 0.0
        else:
            out.append('"nan"' if math.isnan(x) else ('"inf"' if x > 0 else '"-inf"'))
    elif isinstance(x, str):
        out.append(json.dumps(x))
    elif isinstance(x, list):
        out.append("[")
        for i, v in enumerate(x):
            if i:
                out.append(", ")
            _emit(v, out)
        out.append("]")
    elif isinstance(x, dict):
        out.append("{")
        for i, (k, v) in enumerate(x.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(k))
            out.append(": ")
            _emit(v, out)
        out.append("}")
    else:
        raise TypeError(f"cannot encode {type(x).__name__}")


def dumps(obj):
    """Deterministic JSON text (17 significant digits, non-finite floats as strings)."""
    out = []
    _emit(_plain(obj), out)
    return "".join(out)


def parse_float(v):
    """Inverse of the encoding used by :func:`dumps` for a single number."""
    return float(v)  # float() already accepts "inf", "-inf" and "nan"


__all__ = ["load_json", "decode", "load", "load_cloud", "cloud_to_json", "graph_to_json", "dumps", "parse_float"]
