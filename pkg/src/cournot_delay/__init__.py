"""Delay-stability analysis of a Cournot duopoly with tax evasion."""

from .crossing import (
    Crossing,
    CrossingPoly,
    CrossingReport,
    NearMultipleRootError,
    NumericalError,
    StabilityClass,
    build_crossing_poly,
    classify,
    critical_delay,
    crossing_delays,
    positive_roots,
    transversality,
)
from .dde import SimConfig, Trajectory, Verdict, classify_tail, integrate, period_estimate
from .linearization import (
    DelayLTI,
    QuasiPolyCoeffs,
    closed_form_coeffs,
    eval_quasipoly,
    numeric_coeffs,
    numeric_linearize,
    stability_at_zero_delay,
)
from .model import DomainError, Equilibrium, ModelParams, ParameterError, State, equilibrium, profit, rhs
from .spectrum import Region, SpectrumError, SpectrumResult, map_roots, rightmost_root

__all__ = [
    "Crossing", "CrossingPoly", "CrossingReport", "DelayLTI", "DomainError", "Equilibrium",
    "ModelParams", "NearMultipleRootError", "NumericalError", "ParameterError", "QuasiPolyCoeffs",
    "Region", "SimConfig", "SpectrumError", "SpectrumResult", "StabilityClass", "State",
    "Trajectory", "Verdict", "build_crossing_poly", "classify", "classify_tail",
    "closed_form_coeffs", "critical_delay", "crossing_delays", "equilibrium", "eval_quasipoly",
    "integrate", "map_roots", "numeric_coeffs", "numeric_linearize", "period_estimate",
    "positive_roots", "profit", "rhs", "rightmost_root", "stability_at_zero_delay",
    "transversality",
]
