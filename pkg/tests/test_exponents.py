import numpy as np
import pytest

from conftest import X0, X1, make_absxy
from tamegeo.core_sets import ImplicitSetSpec, PointCloud, sample
from tamegeo.errors import FitError, InputError, NumericalError
from tamegeo.expr import parse_expr
from tamegeo.exponents import (
    loj_function_exponent,
    one_dim_gradient_exponent,
    phi_profile,
    sample_intersection,
    separation_exponent,
    subgradient_exponent,
)
from tamegeo.fits import fit_envelope
from tamegeo.subgradients import PiecewiseFn

SQRT_ABS = parse_expr(["sqrt", ["abs", X0]], 1)
SQUARES = PiecewiseFn.from_expr(["+", ["*", X0, X0], ["*", X1, X1]], 2, 10.0)
AXIS_SPEC = ImplicitSetSpec(2, [X1], [], [[-0.2, 0.2], [-0.05, 0.05]])
PARABOLA_SPEC = ImplicitSetSpec(2, [["-", X1, ["*", X0, X0]]], [], [[-0.2, 0.2], [-0.05, 0.05]])


def envelope_samples(fit):
    s = fit.samples
    return np.exp(s["log_u"]), np.exp(s["log_v"])


@pytest.fixture(scope="module")
def sqrt_graph_vs_axis():
    graph = sample(ImplicitSetSpec(2, [["-", ["*", X1, X1], ["abs", X0]]], [X1], [[-0.1, 0.1], [0.0, 0.32]]), 1e-3)
    xs = np.arange(-0.4, 0.4 + 1e-12, 1e-4)
    axis = PointCloud.from_points(np.c_[xs, np.zeros_like(xs)], 1e-4)
    return separation_exponent(graph, axis, [0.0, 0.0])


@pytest.fixture(scope="module")
def axis_vs_parabola():
    return separation_exponent(AXIS_SPEC, PARABOLA_SPEC, [0.0, 0.0], grid_step=5e-4)


# --- envelope fitting


def test_envelope_exact_power_laws():
    u = np.geomspace(1e-4, 1e-1, 500)
    assert fit_envelope(u, u).exponent == pytest.approx(1, abs=1e-9)
    fit = fit_envelope(u, 3 * u ** 2)
    assert fit.exponent == pytest.approx(2, abs=1e-6)
    assert fit.constant == pytest.approx(3, rel=1e-6)


def test_envelope_with_oscillating_factor():
    u = np.geomspace(1e-4, 1e-1, 4000)
    fit = fit_envelope(u, u ** 0.5 * (1 + 0.01 * np.sin(1 / u)))
    assert fit.exponent == pytest.approx(0.5, abs=0.02)


def test_envelope_uses_bin_minima(rng):
    u = np.geomspace(1e-3, 1, 600)
    v = u ** 1.5 * (1 + rng.uniform(0, 5, len(u)))
    fit = fit_envelope(u, v)
    # the bulk sits higher; the lower envelope is u^1.5 up to the minimum noise
    assert fit.exponent == pytest.approx(1.5, abs=0.1)
    assert fit.samples["is_min"].sum() == fit.bins
    assert fit.window[0] < fit.window[1] and len(fit.envelope) == fit.bins


def test_envelope_errors():
    u = np.geomspace(1e-3, 1, 100)
    with pytest.raises(FitError):
        fit_envelope(u[:20], u[:20])
    with pytest.raises(FitError):
        fit_envelope(u, u, bins=4)
    with pytest.raises(FitError):
        fit_envelope(u, u - u[0])
    with pytest.raises(FitError):
        fit_envelope(np.r_[np.full(50, 1e-3), np.full(50, 1.0)], np.ones(100))
    with pytest.raises(FitError):
        fit_envelope(np.ones(100), np.ones(100))


# --- Lojasiewicz function exponent


def test_loj_examples():
    assert loj_function_exponent(SQRT_ABS, [0.0], 0.1, 1e-4).exponent == pytest.approx(0.5, abs=0.05)
    assert loj_function_exponent(parse_expr(X0, 1), [0.0], 0.1, 1e-4).exponent == pytest.approx(1, abs=0.02)
    assert loj_function_exponent(parse_expr(["*", X0, X0], 1), [0.0], 0.1, 1e-4).exponent == pytest.approx(2, abs=0.1)


def test_loj_vector_map_and_away_from_origin():
    f = [parse_expr(["*", X0, X0], 2), parse_expr(["*", X1, X1], 2)]
    assert loj_function_exponent(f, [0.0, 0.0], 0.1, 2e-3).exponent == pytest.approx(2, abs=0.1)
    # regular level set through a = 1: linear behaviour
    g = parse_expr(["*", X0, X0], 1)
    assert loj_function_exponent(g, [1.0], 0.1, 1e-4).exponent == pytest.approx(1, abs=0.05)


def test_loj_piecewise_function():
    # |x y| >= min(|x|,|y|)^2 with equality on the diagonals; the diagonal
    # points binding at small distance sit close to 0, so no inner cutoff
    fit = loj_function_exponent(make_absxy(), [0.0, 0.0], 0.1, 5e-4, r_min=0.0)
    assert fit.exponent == pytest.approx(2, abs=0.1)
    # on an annulus |xy| >= r_min d / sqrt(2): the default cutoff sees a smaller exponent
    assert loj_function_exponent(make_absxy(), [0.0, 0.0], 0.1, 5e-4).exponent < fit.exponent


def test_loj_constant_is_rejected():
    with pytest.raises(FitError, match="constant"):
        loj_function_exponent(parse_expr(["const", 2.0], 1), [0.0], 0.1, 1e-3)


def test_loj_envelope_soundness_and_slack():
    fit = loj_function_exponent(SQRT_ABS, [0.0], 0.1, 1e-4)
    u, v = envelope_samples(fit)
    assert fit.holds_fraction(u, v, relax=0.9) >= 0.99
    # a larger exponent with the constant adjusted for the window still holds
    ell2 = fit.exponent + 0.25
    C2 = fit.constant * fit.window[1] ** (ell2 - fit.exponent)
    assert fit.holds_fraction(u, v, relax=0.9, exponent=ell2, constant=C2) >= 0.99


# --- separation exponent


def test_graph_separation_matches_function_exponent(sqrt_graph_vs_axis):
    ell_f = loj_function_exponent(SQRT_ABS, [0.0], 0.1, 1e-4).exponent
    assert sqrt_graph_vs_axis.exponent == pytest.approx(max(ell_f, 1.0), abs=0.15)


def test_axis_parabola_separation(axis_vs_parabola):
    assert axis_vs_parabola.exponent == pytest.approx(2, abs=0.15)


def test_transversal_lines_separate_linearly():
    X = ImplicitSetSpec(2, [X1], [], [[-0.2, 0.2], [-0.2, 0.2]])
    Y = ImplicitSetSpec(2, [["-", X1, ["*", 0.5, X0]]], [], [[-0.2, 0.2], [-0.2, 0.2]])
    assert separation_exponent(X, Y, [0, 0], grid_step=5e-4).exponent == pytest.approx(1, abs=0.1)


@pytest.mark.parametrize("which", ["graph", "parabola"])
def test_separation_exponent_at_least_one(which, sqrt_graph_vs_axis, axis_vs_parabola):
    fit = sqrt_graph_vs_axis if which == "graph" else axis_vs_parabola
    assert fit.exponent >= 0.9
    u, v = envelope_samples(fit)
    assert fit.holds_fraction(u, v, relax=0.9) >= 0.99


def test_interior_intersection_is_rejected():
    xs = np.linspace(-0.1, 0.1, 2001)
    L = PointCloud.from_points(np.c_[xs, 0 * xs], 1e-4)
    with pytest.raises(FitError, match="interior"):
        separation_exponent(L, L, [0.0, 0.0])


def test_separation_errors():
    A = PointCloud.from_points([[0.0, 0.0], [0.1, 0.0]], 1e-3)
    B = PointCloud.from_points([[0.0, 1.0]], 1e-3)
    with pytest.raises(FitError, match="empty"):
        separation_exponent(A, B, [0.0, 0.0])
    with pytest.raises(InputError):
        separation_exponent(AXIS_SPEC, PARABOLA_SPEC, [0.0, 0.0])
    with pytest.raises(InputError):
        separation_exponent(A, PointCloud.from_points([[0.0]], 1e-3), [0.0, 0.0])


def test_joint_intersection_of_tangent_curves():
    I = sample_intersection(AXIS_SPEC, PARABOLA_SPEC, 5e-4)
    assert len(I) >= 1 and np.abs(I.points).max() <= 1e-6


# --- subgradient exponent


def test_subgradient_exponent_examples():
    fit = subgradient_exponent(SQUARES, 1.0, 0.01)
    assert fit.exponent == pytest.approx(0.5, abs=0.05)
    assert fit.notes["theta_in_unit_interval"] and not fit.notes["boundary"]
    line = PiecewiseFn.from_expr(X0, 1, 1.0)
    fit = subgradient_exponent(line, 1.0, 1e-3, require_critical=False)
    assert fit.exponent == pytest.approx(0, abs=0.02)
    assert fit.notes["boundary"] and not fit.notes["theta_in_unit_interval"]


def test_subgradient_exponent_requires_critical_zero():
    with pytest.raises(InputError, match="critical"):
        subgradient_exponent(PiecewiseFn.from_expr(X0, 1, 1.0), 1.0, 1e-3)
    with pytest.raises(InputError, match="critical"):
        subgradient_exponent(PiecewiseFn.from_expr(["+", ["*", X0, X0], 1], 1, 10.0), 1.0, 1e-3)


def test_saddle_theta_in_unit_interval():
    saddle = PiecewiseFn.from_expr(["-", ["*", X0, X0], ["*", X1, X1]], 2, 10.0)
    fit = subgradient_exponent(saddle, 1.0, 0.01)
    assert 0 < fit.exponent < 1
    assert fit.exponent == pytest.approx(0.5, abs=0.05)


# --- phi profile and the one-dimensional exponent


def test_phi_profile_of_absxy():
    t = np.geomspace(0.005, 0.05, 6)
    out = phi_profile(make_absxy(), 0.5, t)
    phi = np.array(out["phi"])
    np.testing.assert_allclose(phi, np.sqrt(2 * t), rtol=0.05)
    assert out["monotone"] and out["vanishing"]
    assert out["log_slope"] == pytest.approx(0.5, abs=0.05)


def test_phi_profile_of_squares():
    t = np.geomspace(0.01, 0.2, 5)
    out = phi_profile(SQUARES, 0.5, t)
    np.testing.assert_allclose(out["phi"], 2 * np.sqrt(t), rtol=0.05)


def test_phi_profile_reports_empty_levels():
    out = phi_profile(SQUARES, 0.5, [0.01, 5.0])
    assert out["phi"][0] is not None and out["errors"][0] is None
    assert out["phi"][1] is None and "5" in out["errors"][1]
    with pytest.raises(InputError):
        phi_profile(SQUARES, 0.5, [0.2, 0.1])


@pytest.mark.parametrize("tree, theta", [
    (["*", X0, X0], 0.5),
    (X0, 0.0),
    (["pow", X0, 3], 2 / 3),
    (["pow", X0, [5, 2]], 0.6),
])
def test_one_dim_exponent(tree, theta):
    fit = one_dim_gradient_exponent(parse_expr(tree, 1), (1e-3, 0.1))
    assert fit.exponent == pytest.approx(theta, abs=0.03)


def test_one_dim_exponent_from_sampled_profile():
    t = np.geomspace(1e-3, 0.1, 200)
    fit = one_dim_gradient_exponent((t, 2 * t ** 2), (1e-3, 0.1))
    assert fit.exponent == pytest.approx(0.5, abs=0.03)


def test_one_dim_exponent_errors():
    with pytest.raises(NumericalError, match="vanish"):
        one_dim_gradient_exponent(parse_expr(["/", 1, ["+", 1, X0]], 1), (1e-3, 0.1))
    with pytest.raises(NumericalError):
        one_dim_gradient_exponent(parse_expr(["-", X0], 1), (1e-3, 0.1))
    with pytest.raises(InputError):
        one_dim_gradient_exponent(parse_expr(X0, 1), (0.1, 1e-3))
    with pytest.raises(InputError):
        one_dim_gradient_exponent(parse_expr(X0, 2), (1e-3, 0.1))
