"""Numerical tame geometry: sampled closed sets, set distances, multifunctions,
tangent cones, Clarke subgradients and Łojasiewicz-type exponent estimates."""

__version__ = "0.1.0"

from . import _accel
from .core_sets import ImplicitSetSpec, PointCloud, dist_point_set, intersect_sphere, restrict_ball, sample
from .errors import (
    ConvergenceError,
    DimensionMismatch,
    EmptySectionError,
    EmptySetError,
    ExprDomainError,
    FitError,
    InputError,
    NumericalError,
    OutsideDomainError,
    TameGeoError,
)
from .expr import ExprFn, parse_expr
from .fits import ExponentFit, fit_envelope
from .metrics import compactify, hausdorff, hausdorff_sphere_extended, kuratowski_dist, stereo_forward, stereo_inverse
from .multifunctions import MultifunctionGraph, section
from .subgradients import PiecewiseFn, Polytope, SubgradientConfig, clarke_subgradient, min_norm_point
from .tangent_cones import ConePresentation, conic_exponent, tangent_cone

BACKEND = _accel.BACKEND
