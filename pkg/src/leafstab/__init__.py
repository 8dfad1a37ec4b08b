"""Lyapunov stability of nongeneric equilibria of an underwater vehicle.

Numeric constrained-Hessian tests on the invariant submanifold {P || Gamma},
closed-form classification, and simulation-based probes.
"""

from .classifier import RegionLabel, classify, lambda_star, scan, stability_inequality
from .manifold import AmbientState, Chart, ChartPoint, ScalarField
from .vehicle_model import REF_PARAMS, EquilibriumSpec, VehicleParams

__all__ = [
    "AmbientState",
    "Chart",
    "ChartPoint",
    "EquilibriumSpec",
    "REF_PARAMS",
    "RegionLabel",
    "ScalarField",
    "VehicleParams",
    "classify",
    "lambda_star",
    "scan",
    "stability_inequality",
]

__version__ = "0.1.0"
