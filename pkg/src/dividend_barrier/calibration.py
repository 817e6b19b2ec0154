"""Barrier calibration under a solvency target.

If the unconstrained free boundary b0 already keeps the ruin probability before T at
or below epsilon it is optimal. Otherwise the barrier is raised to the smallest b with
psi~(b) = epsilon, found by doubling from b0 and bisecting on the decreasing map
b -> psi~(b).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, NumericalError, TargetUnattainable
from .hjb import HjbSolution, value_ratio
from .model import ModelParams, SolvencyTarget, require_valid
from .survival import PdeOptions, RuinEstimate, ruin_at_barrier_detail

TOL_CAL = 1e-4
REL_WIDTH = 1e-6
CAP_FACTOR = 1e4
MAX_ITER = 200


class Regime(str, enum.Enum):
    UNCONSTRAINED = "Unconstrained"
    CONSTRAINED = "Constrained"


@dataclass(frozen=True)
class BracketStep:
    """Bracket after one step; ``b`` is the barrier evaluated in that step."""

    phase: str  # "bracket" while doubling, "bisect" afterwards
    lo: float
    hi: float
    b: float
    psi: float
    nx: int


@dataclass(frozen=True)
class CalibrationResult:
    regime: Regime
    barrier: float
    achieved_ruin: float
    epsilon: float
    # h'(b0)/h'(barrier) = V(x, barrier)/V(x, b0): share of the unconstrained value kept
    value_ratio: float
    bracket: tuple[float, float]
    b0: float
    ruin_at_b0: float
    trace: tuple[BracketStep, ...] = ()


class _RuinMap:
    """Memoised b -> psi~(b) at a given refinement level."""

    def __init__(self, p: ModelParams, sol: HjbSolution, T: float, opts: PdeOptions | None):
        self.p, self.sol, self.T = p, sol, T
        self.opts = opts or PdeOptions()
        self.level = 0
        self._cache: dict[tuple[float, int], RuinEstimate] = {}

    def _opts(self, level):
        k = 2**level
        return replace(self.opts, nx=self.opts.nx * k, nt=self.opts.nt * k)

    def detail(self, b: float, level: int | None = None) -> RuinEstimate:
        level = self.level if level is None else level
        key = (float(b), level)
        if key not in self._cache:
            self._cache[key] = ruin_at_barrier_detail(self.p, self.sol, b, self.T, self._opts(level))
        return self._cache[key]

    def __call__(self, b: float, level: int | None = None) -> float:
        return self.detail(b, level).value


def decide_regime(p: ModelParams, sol: HjbSolution, target: SolvencyTarget,
                  opts: PdeOptions | None = None) -> tuple[Regime, float]:
    """Regime flag and psi~(b0)."""
    return _decide(_RuinMap(p, sol, target.horizon, opts), sol, target)


def _decide(psi: _RuinMap, sol, target):
    require_valid(psi.p, target)
    if not psi.p.m > 0:
        raise DomainError("calibration needs m > 0")
    r0 = psi(sol.b0)
    return (Regime.UNCONSTRAINED if r0 <= target.epsilon else Regime.CONSTRAINED), r0


def calibrate(p: ModelParams, sol: HjbSolution, target: SolvencyTarget,
              opts: PdeOptions | None = None, tol_cal: float = TOL_CAL) -> CalibrationResult:
    """Optimal barrier under the solvency target."""
    return _calibrate(_RuinMap(p, sol, target.horizon, opts), sol, target, tol_cal)


def _calibrate(psi: _RuinMap, sol: HjbSolution, target: SolvencyTarget, tol_cal: float) -> CalibrationResult:
    regime, r0 = _decide(psi, sol, target)
    eps, b0 = target.epsilon, sol.b0
    if regime is Regime.UNCONSTRAINED:
        return CalibrationResult(regime, b0, r0, eps, 1.0, (b0, b0), b0, r0)

    # bracket: psi(lo) > eps >= psi(hi)
    lo, hi = b0, 2.0 * b0
    steps = [BracketStep("bracket", lo, hi, hi, psi(hi), psi.detail(hi).nx)]
    cap = CAP_FACTOR * b0
    while psi(hi) > eps:
        if 2.0 * hi > cap:
            raise TargetUnattainable(cap, psi(hi))
        lo, hi = hi, 2.0 * hi
        steps.append(BracketStep("bracket", lo, hi, hi, psi(hi), psi.detail(hi).nx))

    retried = False
    for _ in range(MAX_ITER):
        # the width condition pins b* to the discrete root, not just to a tol_cal band around it
        if hi - lo <= REL_WIDTH * b0:
            break
        mid = 0.5 * (lo + hi)
        v_lo, v_mid, v_hi = psi(lo), psi(mid), psi(hi)
        if v_mid > v_lo + tol_cal or v_mid < v_hi - tol_cal:
            # contradicts the monotone map: refine the PDE once and retry
            if retried:
                raise NumericalError(f"non-monotone ruin map on [{lo:g}, {hi:g}] at level {psi.level}: "
                                     f"psi = ({v_lo:.6g}, {v_mid:.6g}, {v_hi:.6g})")
            retried = True
            psi.level += 1
            continue
        if v_mid > eps:
            lo = mid
        else:
            hi = mid
        steps.append(BracketStep("bisect", lo, hi, mid, v_mid, psi.detail(mid).nx))
    else:
        raise NumericalError(f"calibration did not reach tolerance in {MAX_ITER} iterations: "
                             f"bracket [{lo:.10g}, {hi:.10g}], psi(lo) - eps = {psi(lo) - eps:.3g}")

    achieved = psi(lo)
    if achieved - eps > tol_cal:
        raise NumericalError(f"ruin map jumps across epsilon inside [{lo:.10g}, {hi:.10g}]: "
                             f"psi(lo) = {achieved:.6g}, psi(hi) = {psi(hi):.6g}")
    return CalibrationResult(Regime.CONSTRAINED, lo, achieved, eps, value_ratio(sol, b0, lo), (lo, hi),
                             b0, r0, tuple(steps))


@dataclass(frozen=True)
class CurvePoint:
    epsilon: float
    barrier: float
    regime: Regime | None
    achieved_ruin: float
    error: str | None = None


@dataclass(frozen=True)
class EpsilonCurve:
    points: tuple[CurvePoint, ...]
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def epsilons(self) -> np.ndarray:
        return np.array([q.epsilon for q in self.points])

    @property
    def barriers(self) -> np.ndarray:
        return np.array([q.barrier for q in self.points])

    @property
    def failed(self) -> list[CurvePoint]:
        return [q for q in self.points if q.error is not None]


def b_of_epsilon_curve(p: ModelParams, sol: HjbSolution, T: float, eps_list,
                       opts: PdeOptions | None = None, tol_cal: float = TOL_CAL) -> EpsilonCurve:
    """Calibrated barrier for each epsilon; failed points carry an error message and NaN barrier."""
    eps_list = [float(e) for e in eps_list]
    if any(not 0.0 < e < 1.0 for e in eps_list):
        raise DomainError("epsilon values must lie in (0, 1)")
    if any(e2 <= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise DomainError("epsilon values must be strictly increasing")
    psi = _RuinMap(p, sol, T, opts)  # shared so bracket evaluations are reused across points
    points = []
    for eps in eps_list:
        try:
            res = _calibrate(psi, sol, SolvencyTarget(eps, T), tol_cal)
            points.append(CurvePoint(eps, res.barrier, res.regime, res.achieved_ruin))
        except NumericalError as exc:
            points.append(CurvePoint(eps, math.nan, None, math.nan, str(exc)))
    good = [q for q in points if q.error is None]
    for q1, q2 in zip(good, good[1:]):
        # each barrier is only pinned to tol_cal in psi, so closer epsilons are not comparable
        if q2.barrier > q1.barrier and q2.epsilon - q1.epsilon > 2 * tol_cal:
            raise NumericalError(f"b(eps) increased from {q1.barrier:.8g} (eps={q1.epsilon:g}) "
                                 f"to {q2.barrier:.8g} (eps={q2.epsilon:g})")
    return EpsilonCurve(tuple(points), {"T": T, "params": p})
