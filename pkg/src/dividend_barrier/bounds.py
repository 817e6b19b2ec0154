"""Closed-form lower bound on the ruin probability before T under a barrier policy.

    eps(b, T) = 4 * (1 - Phi((b - m) / sqrt(kappa*T)))**2 * exp(-(lam*mu + r)**2 * T / sigmap2)
    kappa = (lam**2 * sigma2 + sigmap2) * m**2

with lam the slope of the linear retention policy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import DomainError
from .hjb import HjbSolution
from .model import ModelParams, require_valid
from .survival import PdeOptions, ruin_at_barrier_detail

TOL_BOUND = 1e-6


def norm_sf(z):
    """Upper normal tail 1 - Phi(z), through erfc so it keeps full relative accuracy for large z."""
    return 0.5 * erfc(np.asarray(z, dtype=float) / math.sqrt(2.0))


def norm_cdf(z):
    return 0.5 * erfc(-np.asarray(z, dtype=float) / math.sqrt(2.0))


@dataclass(frozen=True)
class BoundInput:
    b: float
    T: float
    lam: float
    p: ModelParams

    def validate(self) -> None:
        require_valid(self.p)
        if not self.p.m > 0:
            raise DomainError("ruin bound needs m > 0")
        if not self.p.sigmap2 > 0:
            raise DomainError("ruin bound needs sigmap2 > 0")
        if not self.b >= self.p.m:
            raise DomainError(f"barrier b={self.b:g} below m={self.p.m:g}")
        if not self.T > 0:
            raise DomainError("horizon T must be positive")
        if not self.lam > 0:
            raise DomainError("policy slope lambda must be positive")


def kappa(p: ModelParams, lam: float) -> float:
    return (lam * lam * p.sigma2 + p.sigmap2) * p.m * p.m


def ruin_lower_bound(inp: BoundInput) -> float:
    inp.validate()
    p = inp.p
    z = (inp.b - p.m) / math.sqrt(kappa(p, inp.lam) * inp.T)
    tail = float(norm_sf(z))
    return 4.0 * tail * tail * math.exp(-((inp.lam * p.mu + p.r) ** 2) * inp.T / p.sigmap2)


@dataclass(frozen=True)
class BoundRow:
    b: float
    ruin: float
    bound: float
    margin: float
    tol: float
    passed: bool


@dataclass(frozen=True)
class BoundReport:
    rows: tuple[BoundRow, ...]
    lam: float
    horizon: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


def check_bound(p: ModelParams, sol: HjbSolution, bs, T: float, lam: float | None = None,
                opts: PdeOptions | None = None) -> BoundReport:
    """Compare psi~(b) from the survival solver with the bound for each barrier."""
    lam = sol.lam if lam is None else float(lam)
    rows = []
    for b in bs:
        bound = ruin_lower_bound(BoundInput(float(b), T, lam, p))
        est = ruin_at_barrier_detail(p, sol, float(b), T, opts)
        tol = max(TOL_BOUND, est.refinement_residual)
        margin = est.value - bound
        rows.append(BoundRow(float(b), est.value, bound, margin, tol, margin >= -tol))
    return BoundReport(tuple(rows), lam, T)
