"""Optimal dividend barriers for an insurer with proportional reinsurance and a solvency constraint.

Solvers for the HJB free boundary, the survival-probability PDE and the calibrated
barrier, with a Monte Carlo simulator and a closed-form ruin bound as cross-checks.
"""
from .bounds import BoundInput, check_bound, ruin_lower_bound
from .calibration import CalibrationResult, Regime, b_of_epsilon_curve, calibrate, decide_regime
from .errors import (ConfigError, DividendBarrierError, DomainError, FreeBoundaryNotFound,
                     InvalidStateError, NumericalError, TargetUnattainable)
from .hjb import (HjbSolution, SolverOptions, ValueFunction, build_value, hjb_curvature, homogeneous_policy,
                  solve_hjb, value_ratio)
from .model import (ModelParams, PolicyCurve, SolvencyTarget, diffusion_sq, drift, policy_eval,
                    validate_params)
from .montecarlo import SimConfig, SimResult, estimate_ruin, estimate_value, simulate_path, zero_reserve_study
from .survival import PdeOptions, SurvivalGrid, ruin_at_barrier, scan_barriers, solve_survival

__all__ = [
    "BoundInput", "CalibrationResult", "ConfigError", "DividendBarrierError", "DomainError",
    "FreeBoundaryNotFound", "HjbSolution", "InvalidStateError", "ModelParams", "NumericalError",
    "PdeOptions", "PolicyCurve", "Regime", "SimConfig", "SimResult", "SolvencyTarget", "SolverOptions",
    "SurvivalGrid", "TargetUnattainable", "ValueFunction", "b_of_epsilon_curve", "build_value",
    "calibrate", "check_bound", "decide_regime", "diffusion_sq", "drift", "estimate_ruin", "estimate_value",
    "hjb_curvature", "homogeneous_policy", "policy_eval", "ruin_at_barrier", "ruin_lower_bound",
    "scan_barriers", "simulate_path", "solve_hjb", "solve_survival", "validate_params", "value_ratio",
    "zero_reserve_study",
]
