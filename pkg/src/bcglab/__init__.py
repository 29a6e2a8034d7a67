"""Numerical convex geometry over the reals, complexes, and quaternions."""

from . import _core
from .estimate import Estimate
from .functionals import Weight, b_balls_exact, b_functional, brs_gap, kappa, omega
from .ncla import FMat, det_abs, det_abs_tuple, realify, right_action, row_expansion
from .scalars import Field, FVector, Scalar

__version__ = "0.1.0"
backend = _core.backend_name

__all__ = [
    "Estimate",
    "FMat",
    "FVector",
    "Field",
    "Scalar",
    "Weight",
    "b_balls_exact",
    "b_functional",
    "backend",
    "brs_gap",
    "det_abs",
    "det_abs_tuple",
    "kappa",
    "omega",
    "realify",
    "right_action",
    "row_expansion",
]
