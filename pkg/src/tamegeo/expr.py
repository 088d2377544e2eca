"""Polynomial-and-abs expression trees with vectorised evaluation.

Trees use the nested-array form of the JSON interface::

    ["*", ["abs", ["var", 0]], ["var", 1]]      # |x0| * x1

Leaves are ``["var", i]``, ``["const", c]`` or bare numbers.  Interior
nodes: ``+`` and ``*`` (n-ary), ``-`` (unary or binary), ``/``, ``abs``,
``min``, ``max`` (n-ary), ``sqrt`` and ``pow``.  The exponent of ``pow`` is
an integer or a rational ``[p, q]`` with ``q > 0``.

Evaluation runs on a whole batch of points at once and optionally carries a
forward-mode gradient alongside the value.  Leaving the domain of ``/``,
``sqrt`` or a rational power raises :class:`ExprDomainError` instead of
producing a NaN.
"""

from fractions import Fraction
from numbers import Integral, Real

import numpy as np

from .errors import ExprDomainError, InputError

NARY = {"+", "*", "min", "max"}
UNARY = {"abs", "sqrt"}
NONSMOOTH = {"abs", "min", "max", "sqrt"}


def _normalize(node, arity):
    if isinstance(node, bool):
        raise InputError(f"boolean is not an expression: {node!r}")
    if isinstance(node, Real):
        return ("const", float(node))
    if not isinstance(node, (list, tuple)) or not node:
        raise InputError(f"malformed expression node: {node!r}")
    op, args = node[0], list(node[1:])
    if op == "var":
        if len(args) != 1 or not isinstance(args[0], Integral) or isinstance(args[0], bool):
            raise InputError(f"bad variable node: {node!r}")
        if not 0 <= args[0] < arity:
            raise InputError(f"variable index {args[0]} out of range for arity {arity}")
        return ("var", int(args[0]))
    if op == "const":
        if len(args) != 1 or not isinstance(args[0], Real):
            raise InputError(f"bad constant node: {node!r}")
        return ("const", float(args[0]))
    if op in NARY:
        if not args:
            raise InputError(f"{op!r} needs at least one operand")
        return (op, *(_normalize(a, arity) for a in args))
    if op == "-":
        if len(args) not in (1, 2):
            raise InputError("'-' takes one or two operands")
        return ("-", *(_normalize(a, arity) for a in args))
    if op == "/":
        if len(args) != 2:
            raise InputError("'/' takes two operands")
        return ("/", *(_normalize(a, arity) for a in args))
    if op in UNARY:
        if len(args) != 1:
            raise InputError(f"{op!r} takes one operand")
        return (op, _normalize(args[0], arity))
    if op == "pow":
        if len(args) != 2:
            raise InputError("'pow' takes a base and an exponent")
        e = args[1]
        if isinstance(e, Integral) and not isinstance(e, bool):
            exp = Fraction(int(e))
        elif isinstance(e, (list, tuple)) and len(e) == 2 and all(isinstance(v, Integral) for v in e) and e[1] > 0:
            exp = Fraction(int(e[0]), int(e[1]))
        else:
            raise InputError(f"pow exponent must be an integer or [p, q]: {e!r}")
        return ("pow", _normalize(args[0], arity), exp)
    raise InputError(f"unknown operator {op!r}")


def _to_json(node):
    op = node[0]
    if op == "var":
        return ["var", node[1]]
    if op == "const":
        return ["const", node[1]]
    if op == "pow":
        e = node[2]
        return ["pow", _to_json(node[1]), int(e) if e.denominator == 1 else [e.numerator, e.denominator]]
    return [op, *(_to_json(a) for a in node[1:])]


def _domain_fail(msg, mask, X):
    idx = int(np.flatnonzero(mask)[0])
    raise ExprDomainError(f"{msg} at point {X[idx].tolist()}", index=idx, point=X[idx].copy())


class ExprFn:
    """Scalar expression in ``arity`` variables.

    Parameters
    ----------
    tree : nested list
        Expression in nested-array form.
    arity : int
        Number of variables ``x0 .. x{arity-1}``.
    """

    def __init__(self, tree, arity):
        if not isinstance(arity, Integral) or arity < 1:
            raise InputError(f"arity must be a positive integer, got {arity!r}")
        self.arity = int(arity)
        self._node = _normalize(tree, self.arity)

    @property
    def tree(self):
        return _to_json(self._node)

    def __repr__(self):
        return f"ExprFn({self.tree!r}, arity={self.arity})"

    def __eq__(self, other):
        return isinstance(other, ExprFn) and self.arity == other.arity and self._node == other._node

    def __hash__(self):
        return hash((self.arity, self._node))

    @property
    def is_smooth(self):
        """False if the tree contains a primitive with a kink or cusp."""

        def walk(n):
            op = n[0]
            if op in NONSMOOTH:
                return False
            if op == "pow" and (n[2].denominator != 1 or n[2] < 0):
                return False
            if op in ("var", "const"):
                return True
            return all(walk(a) for a in n[1:] if isinstance(a, tuple))

        return walk(self._node)

    def shifted(self, c):
        """Expression for ``self - c``."""
        out = ExprFn.__new__(ExprFn)
        out.arity = self.arity
        out._node = ("-", self._node, ("const", float(c)))
        return out

    def _points(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            if self.arity == 1 and X.shape[0] != 1:
                X = X[:, None]
            else:
                X = X[None, :]
        if X.shape[-1] != self.arity:
            raise InputError(f"expected points of dimension {self.arity}, got {X.shape[-1]}")
        return X

    def __call__(self, X):
        """Values at the rows of ``X`` (shape ``(N, arity)``); returns shape ``(N,)``."""
        X = self._points(X)
        with np.errstate(all="ignore"):
            v, _ = self._eval(self._node, X, False)
        return np.broadcast_to(v, (X.shape[0],)).copy()

    def value_and_grad(self, X):
        """Values ``(N,)`` and forward-mode gradients ``(N, arity)``.

        Gradients of ``abs``/``min``/``max`` use the one-sided rule of the
        active branch; where ``sqrt`` or a fractional power has an infinite
        derivative the gradient entry is ``inf``/``nan``.
        """
        X = self._points(X)
        n = X.shape[0]
        with np.errstate(all="ignore"):
            v, g = self._eval(self._node, X, True)
        v = np.broadcast_to(v, (n,)).copy()
        g = np.broadcast_to(g, (n, self.arity)).copy()
        return v, g

    def _eval(self, node, X, grad):
        n, m = X.shape
        op = node[0]
        if op == "const":
            return np.full(n, node[1]), (np.zeros((n, m)) if grad else None)
        if op == "var":
            i = node[1]
            g = None
            if grad:
                g = np.zeros((n, m))
                g[:, i] = 1.0
            return X[:, i].copy(), g
        parts = [self._eval(a, X, grad) for a in node[1:] if isinstance(a, tuple)]
        if op == "+":
            v = sum(p[0] for p in parts)
            g = sum(p[1] for p in parts) if grad else None
            return v, g
        if op == "-":
            if len(parts) == 1:
                return -parts[0][0], (-parts[0][1] if grad else None)
            (a, ga), (b, gb) = parts
            return a - b, (ga - gb if grad else None)
        if op == "*":
            v, g = parts[0]
            for b, gb in parts[1:]:
                if grad:
                    g = g * b[:, None] + gb * v[:, None]
                v = v * b
            return v, g
        if op == "/":
            (a, ga), (b, gb) = parts
            bad = b == 0
            if bad.any():
                _domain_fail("division by zero", bad, X)
            v = a / b
            g = (ga - gb * v[:, None]) / b[:, None] if grad else None
            return v, g
        if op == "abs":
            a, ga = parts[0]
            return np.abs(a), (ga * np.sign(a)[:, None] if grad else None)
        if op in ("min", "max"):
            vals = np.stack([p[0] for p in parts])
            pick = vals.argmin(axis=0) if op == "min" else vals.argmax(axis=0)
            v = vals[pick, np.arange(n)]
            g = None
            if grad:
                gs = np.stack([p[1] for p in parts])
                g = gs[pick, np.arange(n)]
            return v, g
        if op == "sqrt":
            a, ga = parts[0]
            bad = a < 0
            if bad.any():
                _domain_fail("sqrt of a negative number", bad, X)
            v = np.sqrt(a)
            g = None
            if grad:
                g = _chain(ga, 0.5 / v)
            return v, g
        if op == "pow":
            a, ga = parts[0]
            e = node[2]
            p, q = e.numerator, e.denominator
            if e < 0 and (a == 0).any():
                _domain_fail("zero raised to a negative power", a == 0, X)
            if q == 1:
                v = a ** float(p)
            else:
                if q % 2 == 0 and (a < 0).any():
                    _domain_fail(f"even root of a negative number (exponent {p}/{q})", a < 0, X)
                root = np.sign(a) * np.abs(a) ** (1.0 / q)
                v = root ** p if p >= 0 else 1.0 / root ** (-p)
            g = None
            if grad:
                if e == 0:
                    g = np.zeros_like(ga)
                elif q == 1:
                    g = ga * (float(e) * a ** float(p - 1))[:, None]
                else:
                    # a^(p/q) = r^p with r the real q-th root, derivative (p/q) r^(p-q)
                    g = _chain(ga, float(e) * root ** float(p - q))
            return v, g
        raise AssertionError(op)


def _chain(ga, factor):
    """``ga * factor`` with ``0 * inf`` treated as 0 (direction not moving)."""
    out = ga * factor[:, None]
    out[ga == 0] = 0.0
    return out


def parse_expr(obj, arity):
    """Build an :class:`ExprFn` from a nested list or pass one through."""
    if isinstance(obj, ExprFn):
        if obj.arity != arity:
            raise InputError(f"expression arity {obj.arity} != {arity}")
        return obj
    return ExprFn(obj, arity)
