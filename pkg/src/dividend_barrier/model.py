"""Model parameters, solvency targets, and the retention feedback policy.

Reserve dynamics under retention ``a`` in [0, 1] (share of each claim kept)::

    dR = (a*mu + r*R) dt + sqrt(a**2 * sigma2 + sigmap2 * R**2) dW - dL

Ruin happens the first time ``R <= m``; ``L`` is the cumulative dividend stream.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class ModelParams:
    """Insurance and market coefficients.

    mu, sigma2: drift and variance rate of the claims process per unit of retained risk.
    sigmap2: squared volatility of the invested asset.
    r: investment return rate, c: discount rate, m: minimum reserve (ruin level).
    """

    mu: float
    sigma2: float
    sigmap2: float
    r: float
    c: float
    m: float

    def replace(self, **changes) -> "ModelParams":
        values = {k: getattr(self, k) for k in ("mu", "sigma2", "sigmap2", "r", "c", "m")}
        values.update(changes)
        return ModelParams(**values)


@dataclass(frozen=True)
class SolvencyTarget:
    """Ruin before ``horizon`` must have probability at most ``epsilon``."""

    epsilon: float
    horizon: float


@dataclass(frozen=True)
class ValidationReport:
    messages: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.messages

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_failed(self) -> None:
        if self.messages:
            raise DomainError("; ".join(self.messages))


def validate_params(p: ModelParams | None = None, target: SolvencyTarget | None = None) -> ValidationReport:
    """Check the standing assumptions; returns one message per violation and never raises."""
    msgs: list[str] = []
    if p is not None:
        for name in ("mu", "sigma2", "sigmap2", "r", "c", "m"):
            v = getattr(p, name)
            if not isinstance(v, (int, float)) or not np.isfinite(v):
                msgs.append(f"{name} is not a finite number")
        if not msgs:
            if not p.mu > 0:
                msgs.append("mu > 0 violated")
            if not p.sigma2 > 0:
                msgs.append("sigma2 > 0 violated")
            if not p.sigmap2 >= 0:
                msgs.append("sigmap2 >= 0 violated")
            if not p.r >= 0:
                msgs.append("r >= 0 violated")
            if not p.c > 0:
                msgs.append("c > 0 violated")
            if not p.m >= 0:
                msgs.append("m >= 0 violated")
            if not p.r <= p.c:
                msgs.append("r ≤ c violated")
    if target is not None:
        if not (0.0 < target.epsilon < 1.0):
            msgs.append("epsilon outside (0,1)")
        if not target.horizon > 0:
            msgs.append("horizon T > 0 violated")
    return ValidationReport(tuple(msgs))


def require_valid(p: ModelParams, target: SolvencyTarget | None = None) -> None:
    validate_params(p, target).raise_if_failed()


def _check_retention(a):
    arr = np.asarray(a, dtype=float)
    if np.any((arr < 0.0) | (arr > 1.0)) or np.any(np.isnan(arr)):
        raise DomainError(f"retention outside [0,1]: {a!r}")


def drift(p: ModelParams, x, a):
    """Drift rate ``a*mu + r*x``."""
    _check_retention(a)
    return a * p.mu + p.r * x


def diffusion_sq(p: ModelParams, x, a):
    """Squared diffusion coefficient ``a**2 sigma2 + sigmap2 x**2``; callers take the root."""
    _check_retention(a)
    return a * a * p.sigma2 + p.sigmap2 * x * x


@dataclass(frozen=True)
class PolicyCurve:
    """Feedback retention a*(x): tabulated samples plus the linear summary (slope, switch point).

    ``retention`` interpolates the samples and is what the simulators use. The linear
    form ``min(slope*x, 1)`` is exposed through :func:`policy_eval`.
    """

    switch_point: float
    slope: float
    alpha_hat: float
    xs: np.ndarray
    values: np.ndarray
    m: float
    lsq_slope: float = float("nan")
    linearity_deviation: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def retention(self, x):
        """Interpolated a*(x). Linear form below the first sample, full retention past the last."""
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape)
        low = x < self.switch_point
        if np.any(low):
            xl = x[low]
            out[low] = np.where(xl < self.xs[0], np.clip(self.slope * xl, 0.0, 1.0),
                                np.interp(xl, self.xs, self.values))
        return out if out.ndim else float(out)

    __call__ = retention


def policy_eval(curve: PolicyCurve, x):
    """Linear feedback ``min(slope*x, 1)`` clamped to [0, 1]."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr < curve.m):
        raise DomainError(f"reserve {x!r} below minimum reserve m={curve.m:g}")
    out = np.clip(curve.slope * arr, 0.0, 1.0)
    out = np.where(arr >= curve.switch_point, 1.0, out)
    return out if out.ndim else float(out)
