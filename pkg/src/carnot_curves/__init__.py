"""Horizontal curves in the Heisenberg and Engel groups.

``planar`` builds C^1 plane curves with prescribed ends and signed area,
``hgroup`` lifts them to H^n, ``lusin`` approximates sampled horizontal
curves by C^1 horizontal ones, and ``engel`` builds a horizontal curve in the
Engel group that C^1 horizontal curves cannot follow on a large set.
"""

from .curves import PiecewiseCurve, Segment
from .hgroup import HorizontalCurve, HorizontalPath, HPoint, HVector, SampledCurve, h_inv, h_mul, lift, signed_area
from .planar import PlaneProblem, construct_sigma

__all__ = [
    "HPoint",
    "HVector",
    "HorizontalCurve",
    "HorizontalPath",
    "PiecewiseCurve",
    "PlaneProblem",
    "SampledCurve",
    "Segment",
    "construct_sigma",
    "h_inv",
    "h_mul",
    "lift",
    "signed_area",
]

__version__ = "0.1.0"
