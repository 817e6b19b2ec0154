"""HJB free-boundary solver for the dividend/reinsurance problem.

The value kernel h solves, for x >= m with h(m) = 0,

    max_{a in [0,1]} { 0.5*(sigma2*a**2 + sigmap2*x**2) h'' + (mu*a + r*x) h' - c*h } = 0.

The equation is degree-1 homogeneous in h, so we fix h'(m) = hp0 (default 1) and
march forward as an initial value problem. The free boundary b0 is the first
zero of h''; the barrier value function is F_b = h / h'(b) below b and linear above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .errors import DomainError, FreeBoundaryNotFound, InvalidStateError, NumericalError
from .model import ModelParams, PolicyCurve, require_valid


@dataclass(frozen=True)
class SolverOptions:
    rtol: float = 1e-10
    atol: float = 1e-12
    hp0: float = 1.0
    x_max: float | None = None
    tol_pol: float = 1e-6
    # |h''(b0)| <= curvature_tol * |h''(m)|
    curvature_tol: float = 1e-10
    tol_root: float = 1e-12
    max_bisect: int = 200
    # minimum number of grid intervals on [m, b0]
    min_nodes: int = 400


def _curvature_arrays(p: ModelParams, x, h, hp):
    """Vectorised root of g(s) = 0 and its maximiser. Assumes hp > 0."""
    x = np.asarray(x, dtype=float)
    h = np.asarray(h, dtype=float)
    hp = np.asarray(hp, dtype=float)
    var_x = p.sigmap2 * x * x
    # a = 1 is optimal iff the root is >= s_c, where the unconstrained maximiser equals 1
    s_c = -p.mu * hp / p.sigma2
    g_c = 0.5 * (p.sigma2 + var_x) * s_c + (p.mu + p.r * x) * hp - p.c * h
    s_full = (p.c * h - (p.mu + p.r * x) * hp) / (0.5 * (p.sigma2 + var_x))

    # interior branch: 0.5*var_x*s**2 + (r x hp - c h) s - mu**2 hp**2/(2 sigma2) = 0, negative root
    A = 0.5 * var_x
    B = p.r * x * hp - p.c * h
    C = p.mu**2 * hp * hp / (2.0 * p.sigma2)
    D = np.sqrt(B * B + 4.0 * A * C)
    with np.errstate(divide="ignore", invalid="ignore"):
        s_in = np.where(B >= 0, (-B - D) / np.where(A > 0, 2.0 * A, np.nan), -2.0 * C / (-B + D))
        interior = g_c > 0
        s = np.where(interior, s_in, s_full)
        a = np.where(interior, np.clip(-p.mu * hp / (p.sigma2 * s), 0.0, 1.0), 1.0)
    return s, a


def _g(p, x, h, hp, s):
    """g(s) = max_a [...] evaluated in closed form."""
    a = 1.0 if s >= 0 else min(1.0, max(0.0, -p.mu * hp / (p.sigma2 * s)))
    return 0.5 * (p.sigma2 * a * a + p.sigmap2 * x * x) * s + (p.mu * a + p.r * x) * hp - p.c * h, a


def hjb_curvature(p: ModelParams, x: float, h: float, hp: float, tol_root: float = 1e-12):
    """Return (h'', a*) solving the pointwise HJB maximisation at (x, h, h').

    g(s) is strictly increasing in s, so its root is unique. The closed-form root
    is polished by safeguarded Newton steps until |g| <= tol_root * scale.
    """
    if not hp > 0:
        raise InvalidStateError(f"h'(x) must be positive, got {hp!r} at x={x!r}")
    s, a = _curvature_arrays(p, x, h, hp)
    s = float(s)
    if not math.isfinite(s):
        raise NumericalError(f"no finite curvature root at x={x!r}")
    scale = max(1.0, abs(p.c * h), abs((p.mu + p.r * x) * hp))
    gval, a = _g(p, x, h, hp, s)
    for _ in range(50):
        if abs(gval) <= tol_root * scale:
            return s, a
        slope = 0.5 * (p.sigma2 * a * a + p.sigmap2 * x * x)
        if slope <= 0:
            break
        s -= gval / slope
        gval, a = _g(p, x, h, hp, s)
    if abs(gval) <= tol_root * scale:
        return s, a
    raise NumericalError(f"curvature root search did not converge at x={x!r} (|g|={abs(gval):.3g})")


def hjb_residual(p: ModelParams, x, h, hp, hpp):
    """max over a in [0,1] of the HJB operator, closed-form inner maximum."""
    x, h, hp, hpp = (np.asarray(v, dtype=float) for v in (x, h, hp, hpp))
    with np.errstate(divide="ignore", invalid="ignore"):
        a_u = np.where(hpp < 0, -p.mu * hp / (p.sigma2 * hpp), 1.0)
    a = np.clip(a_u, 0.0, 1.0)
    return 0.5 * (p.sigma2 * a * a + p.sigmap2 * x * x) * hpp + (p.mu * a + p.r * x) * hp - p.c * h


def homogeneous_alpha(p: ModelParams) -> float:
    """Exponent of the power solution h(x) = x**alpha when m = 0.

    Plugging x**alpha into the interior HJB branch leaves
    mu**2 alpha / (2 sigma2 (1-alpha)) - sigmap2 alpha (1-alpha)/2 + r alpha - c = 0.
    Returns the smallest root in (0, 1).
    """

    def f(al):
        return p.mu**2 * al / (2 * p.sigma2 * (1 - al)) - 0.5 * p.sigmap2 * al * (1 - al) + p.r * al - p.c

    grid = np.linspace(1e-12, 1 - 1e-9, 2001)
    vals = np.array([f(v) for v in grid])
    idx = np.nonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    if idx.size == 0:
        raise NumericalError("no power-law exponent in (0,1)")
    i = idx[0]
    return brentq(f, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)


def homogeneous_policy(p: ModelParams, b: float, n: int = 401) -> PolicyCurve:
    """Exact linear feedback ``min(lambda x, 1)`` of the m = 0 problem, sampled on [0, b]."""
    alpha = homogeneous_alpha(p)
    lam = p.mu / (p.sigma2 * (1.0 - alpha))
    x0 = 1.0 / lam
    xs = np.union1d(np.linspace(0.0, max(b, x0), n), [x0])
    vals = np.minimum(lam * xs, 1.0)
    return PolicyCurve(switch_point=x0, slope=lam, alpha_hat=alpha, xs=xs, values=vals,
                       m=0.0, lsq_slope=lam, linearity_deviation=0.0)


@dataclass
class HjbSolution:
    params: ModelParams
    grid: np.ndarray
    h: np.ndarray
    hp: np.ndarray
    hpp: np.ndarray
    policy: PolicyCurve
    b0: float
    options: SolverOptions
    _dense: object = field(repr=False, default=None)
    _segments: list = field(repr=False, default_factory=list)

    @property
    def x0(self) -> float:
        return self.policy.switch_point

    @property
    def lam(self) -> float:
        return self.policy.slope

    @property
    def alpha_hat(self) -> float:
        return self.policy.alpha_hat

    # continuation past b0 uses fixed geometric segments so results never depend on call order
    def _extend_to(self, x: float) -> None:
        if not self._segments:
            start, state, width = self.b0, np.array([self.h[-1], self.hp[-1]]), max(self.b0 - self.params.m, 1.0)
        else:
            last = self._segments[-1]
            start, state, width = last[1], last[3], last[4]
        p, o = self.params, self.options
        while (not self._segments) or self._segments[-1][1] < x:
            end = start + width
            sol = solve_ivp(_rhs_factory(p), (start, end), state, method="RK45", rtol=o.rtol,
                            atol=o.atol * o.hp0, dense_output=True)
            if not sol.success:
                raise NumericalError(f"continuation past b0 failed: {sol.message}")
            state = sol.y[:, -1].copy()
            width *= 2.0
            self._segments.append((start, end, sol.sol, state, width))
            start = end

    def _eval(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.any(x < self.params.m - 1e-12):
            raise DomainError(f"reserve below m={self.params.m:g}")
        out = np.empty((2, x.size))
        inner = x <= self.b0
        if np.any(inner):
            out[:, inner] = self._dense(np.clip(x[inner], self.params.m, self.b0))
        outer = ~inner
        if np.any(outer):
            self._extend_to(float(x[outer].max()))
            for i in np.nonzero(outer)[0]:
                for lo, hi, dense, _, _ in self._segments:
                    if x[i] <= hi:
                        out[:, i] = dense(x[i])
                        break
        return out

    def h_at(self, x):
        v = self._eval(x)[0]
        return v if np.ndim(x) else float(v[0])

    def hp_at(self, x):
        v = self._eval(x)[1]
        return v if np.ndim(x) else float(v[0])

    def hpp_at(self, x):
        y = self._eval(x)
        s, _ = _curvature_arrays(self.params, np.atleast_1d(np.asarray(x, float)), y[0], y[1])
        return s if np.ndim(x) else float(s[0])

    def residuals(self) -> np.ndarray:
        return hjb_residual(self.params, self.grid, self.h, self.hp, self.hpp)

    def residual_tolerance(self) -> np.ndarray:
        return 1e-8 * np.maximum(1.0, self.params.c * np.abs(self.h))

    def lsq_slope_window(self) -> np.ndarray:
        """Grid nodes used for the linear-policy diagnostic."""
        a = self.policy.retention(self.grid)
        return self.grid[a < 1.0 - self.options.tol_pol]


def _rhs_factory(p: ModelParams):
    def rhs(x, y):
        s, _ = _curvature_arrays(p, x, y[0], y[1])
        return np.array([y[1], float(s)])

    return rhs


def solve_hjb(p: ModelParams, opts: SolverOptions | None = None) -> HjbSolution:
    """Integrate the HJB from x = m up to the first zero of h'' (the free boundary b0)."""
    opts = opts or SolverOptions()
    require_valid(p)
    if not p.m > 0:
        raise DomainError("solve_hjb requires m > 0 (use homogeneous_policy for m = 0)")
    x_max = opts.x_max if opts.x_max is not None else max(100.0 * p.m, 50.0 * p.mu / p.c)
    rhs = _rhs_factory(p)

    def curvature_event(x, y):
        return float(_curvature_arrays(p, x, y[0], y[1])[0])

    curvature_event.terminal = True
    curvature_event.direction = 1

    def switch_event(x, y):
        # zero where the unconstrained maximiser reaches 1
        s = float(_curvature_arrays(p, x, y[0], y[1])[0])
        return p.sigma2 * s + p.mu * y[1]

    switch_event.direction = 1

    y0 = np.array([0.0, opts.hp0])
    s_m, _ = hjb_curvature(p, p.m, 0.0, opts.hp0)
    if s_m >= 0:
        raise InvalidStateError(f"h''(m) = {s_m:g} is not negative; no concave region")
    sol = solve_ivp(rhs, (p.m, x_max), y0, method="RK45", rtol=opts.rtol, atol=opts.atol * opts.hp0,
                    events=(curvature_event, switch_event), dense_output=True)
    if not sol.success:
        raise NumericalError(f"HJB integration failed: {sol.message}")
    if sol.t_events[0].size == 0:
        raise FreeBoundaryNotFound(p.m, x_max)
    if np.any(sol.y[1] <= 0):
        raise InvalidStateError("h' became non-positive during integration")

    dense = sol.sol
    target = opts.curvature_tol * abs(s_m)
    b0 = _refine_crossing(p, dense, sol.t[-2] if sol.t.size > 1 else p.m, float(sol.t_events[0][0]), target, opts)

    # measured switch point: first x where a* reaches 1
    if p.sigma2 * s_m + p.mu * opts.hp0 >= 0:
        x0 = p.m
    elif sol.t_events[1].size:
        x0 = float(sol.t_events[1][0])
    else:
        x0 = b0

    n_min = opts.min_nodes
    nodes = np.concatenate([sol.t[sol.t < b0], np.linspace(p.m, b0, n_min + 1), [x0, b0]])
    grid = np.unique(nodes)
    grid = grid[(grid >= p.m) & (grid <= b0)]
    y = dense(grid)
    h, hp = y[0], y[1]
    h[0] = 0.0
    hp[0] = opts.hp0
    hpp, a = _curvature_arrays(p, grid, h, hp)
    hpp = np.array(hpp, dtype=float)
    hpp[-1] = float(_curvature_arrays(p, b0, h[-1], hp[-1])[0])
    if np.any(hp <= 0):
        raise InvalidStateError("h' became non-positive on the grid")
    a = np.where(grid >= x0, 1.0, a)

    window = a < 1.0 - opts.tol_pol
    if np.any(window):
        xw, aw = grid[window], a[window]
        lsq = float(np.dot(xw, aw) / np.dot(xw, xw))
    else:
        lsq = float("nan")
    lam = 1.0 / x0
    deviation = float(np.max(np.abs(a[window] / (lam * grid[window]) - 1.0))) if np.any(window) else 0.0
    alpha_hat = 1.0 - p.mu / (lam * p.sigma2)
    policy = PolicyCurve(switch_point=x0, slope=lam, alpha_hat=alpha_hat, xs=grid.copy(), values=a,
                         m=p.m, lsq_slope=lsq, linearity_deviation=deviation)
    return HjbSolution(params=p, grid=grid, h=h, hp=hp, hpp=hpp, policy=policy, b0=b0,
                       options=opts, _dense=dense)


def _refine_crossing(p, dense, lo, hi, target, opts) -> float:
    """Bisect the sign of h'' on the dense interpolant until |h''| <= target."""

    def curv(x):
        y = dense(x)
        return float(_curvature_arrays(p, x, y[0], y[1])[0])

    c_hi = curv(hi)
    if abs(c_hi) <= target:
        return hi
    c_lo = curv(lo)
    if c_lo > 0:
        lo = p.m
        c_lo = curv(lo)
    if c_hi < 0:
        # event landed just short of the crossing; step forward to bracket it
        step = max(hi - lo, 1e-12) * 1e-6
        while c_hi < 0:
            hi += step
            step *= 2
            c_hi = curv(hi)
    for _ in range(opts.max_bisect):
        mid = 0.5 * (lo + hi)
        c_mid = curv(mid)
        if abs(c_mid) <= target:
            return mid
        if c_mid < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            return mid
    raise NumericalError("free-boundary refinement did not reach the curvature tolerance")


@dataclass(frozen=True)
class ValueFunction:
    """Barrier value F_b: 0 below m, h/h'(b) on [m, b], unit slope above b."""

    barrier: float
    base: HjbSolution
    normalizer: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x)
        out = np.zeros(flat.shape)
        b, m = self.barrier, self.base.params.m
        mid = (flat >= m) & (flat <= b)
        if np.any(mid):
            out[mid] = self.base.h_at(flat[mid]) / self.normalizer
        up = flat > b
        if np.any(up):
            out[up] = flat[up] - b + self.at_barrier
        return out.reshape(x.shape) if x.ndim else float(out[0])

    @property
    def at_barrier(self) -> float:
        return self.base.h_at(self.barrier) / self.normalizer

    def derivative(self, x):
        flat = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(flat.shape)
        mid = (flat >= self.base.params.m) & (flat <= self.barrier)
        if np.any(mid):
            out[mid] = self.base.hp_at(flat[mid]) / self.normalizer
        out[flat > self.barrier] = 1.0
        return out if np.ndim(x) else float(out[0])

    def second_derivative(self, x):
        flat = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(flat.shape)
        mid = (flat >= self.base.params.m) & (flat <= self.barrier)
        if np.any(mid):
            out[mid] = self.base.hpp_at(flat[mid]) / self.normalizer
        return out if np.ndim(x) else float(out[0])


def build_value(sol: HjbSolution, b: float) -> ValueFunction:
    """F_b for barrier b; barriers below b0 give the same value as b0."""
    if b < sol.params.m:
        raise DomainError(f"barrier {b:g} below minimum reserve m={sol.params.m:g}")
    b = max(float(b), sol.b0)
    return ValueFunction(barrier=b, base=sol, normalizer=sol.hp_at(b))


def value_ratio(sol: HjbSolution, b1: float, b2: float) -> float:
    """V(x, b2) / V(x, b1) = h'(b1) / h'(b2) for x <= min(b1, b2).

    h' is smallest at b0, so moving the barrier up from b0 gives a ratio below one.
    """
    tol = 1e-12 * max(1.0, sol.b0)
    for b in (b1, b2):
        if b < sol.b0 - tol:
            raise DomainError(f"barrier {b:g} below free boundary b0={sol.b0:g}")
    b1, b2 = max(b1, sol.b0), max(b2, sol.b0)
    return sol.hp_at(b1) / sol.hp_at(b2)


def generator_max(sol: HjbSolution, b: float, xs, n_a: int = 101) -> np.ndarray:
    """max over a-grid of the generator applied to F_b, at each x."""
    p = sol.params
    F = build_value(sol, b)
    xs = np.asarray(xs, dtype=float)
    f, f1, f2 = F(xs), F.derivative(xs), F.second_derivative(xs)
    a = np.linspace(0.0, 1.0, n_a)[:, None]
    vals = 0.5 * (p.sigma2 * a * a + p.sigmap2 * xs * xs) * f2 + (a * p.mu + p.r * xs) * f1 - p.c * f
    return vals.max(axis=0)
