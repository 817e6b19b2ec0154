"""Survival probability of the barrier-controlled reserve.

phi(t, x) = P[no ruin on [0, t] | R_0 = x] solves on [m, b]

    phi_t = 0.5*(a*(x)**2 sigma2 + sigmap2 x**2) phi_xx + (a*(x) mu + r x) phi_x,
    phi(0, x) = 1 (x > m),  phi(t, m) = 0,  phi_x(t, b) = 0,

and psi = 1 - phi is the ruin probability. Time stepping is Crank-Nicolson with a
Rannacher start (four half-size implicit Euler steps) to damp the corner jump.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import lapack

from .errors import DomainError, NumericalError
from .hjb import HjbSolution
from .model import ModelParams, PolicyCurve, require_valid

FIELD_TOL = 1e-9


@dataclass(frozen=True)
class PdeOptions:
    nx: int = 800
    nt: int = 800
    # successive psi(T, b) values must differ by less than this
    tol: float = 1e-5
    max_doublings: int = 4
    rannacher_steps: int = 4
    mesh: str = "log"


@dataclass(frozen=True)
class SurvivalGrid:
    barrier: float
    horizon: float
    space_nodes: np.ndarray
    time_nodes: np.ndarray
    phi: np.ndarray  # shape (len(time_nodes), len(space_nodes)); only the final row if store_field=False
    policy: PolicyCurve
    max_violation: float

    @property
    def final(self) -> np.ndarray:
        return self.phi[-1]

    def psi_final(self) -> np.ndarray:
        return 1.0 - self.phi[-1]

    def psi_at(self, x):
        """Ruin probability before the horizon from initial reserve x (cubic interpolation)."""
        x = np.asarray(x, dtype=float)
        if np.any(x < self.space_nodes[0]) or np.any(x > self.space_nodes[-1] + 1e-12):
            raise DomainError("initial reserve outside [m, b]")
        spline = CubicSpline(self.space_nodes, self.phi[-1])
        val = 1.0 - np.clip(spline(np.minimum(x, self.space_nodes[-1])), 0.0, 1.0)
        return val if val.ndim else float(val)


def _coefficients(p: ModelParams, policy: PolicyCurve, x: np.ndarray):
    a = np.asarray(policy.retention(x), dtype=float)
    diff = 0.5 * (a * a * p.sigma2 + p.sigmap2 * x * x)
    adv = a * p.mu + p.r * x
    return diff, adv


def _operator_bands(p, policy, x, dx):
    """Tridiagonal bands of the space operator acting on unknowns x_1..x_N (uniform x)."""
    diff, adv = _coefficients(p, policy, x[1:])
    return _bands(diff, adv, dx)


def _log_operator_bands(p, policy, x, dy):
    """Same operator in y = ln x: phi_t = (diff/x^2) phi_yy + (adv/x - diff/x^2) phi_y."""
    diff, adv = _coefficients(p, policy, x[1:])
    xi = x[1:]
    d = diff / (xi * xi)
    return _bands(d, adv / xi - d, dy)


def _bands(diff, adv, h):
    lower = diff / h**2 - adv / (2 * h)  # coefficient of u_{i-1}
    main = -2.0 * diff / h**2
    upper = diff / h**2 + adv / (2 * h)  # coefficient of u_{i+1}
    # ghost node u_{N+1} = u_{N-1} at the reflecting barrier
    lower[-1] = 2.0 * diff[-1] / h**2
    upper[-1] = 0.0
    return lower, main, upper


def _apply(lower, main, upper, u):
    out = main * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    return out


def solve_survival(p: ModelParams, sol, b: float, T: float, nx: int = 800, nt: int = 800,
                   rannacher_steps: int = 4, store_field: bool = True, mesh: str = "log") -> SurvivalGrid:
    """Crank-Nicolson solve of the survival equation on [m, b] x [0, T].

    ``sol`` is an :class:`HjbSolution` or a :class:`PolicyCurve` supplying a*(x).
    ``mesh="log"`` spaces the nodes uniformly in ln x, where the investment part of the
    diffusion has a constant coefficient; ``mesh="uniform"`` spaces them uniformly in x.
    """
    require_valid(p)
    if not p.m > 0:
        raise DomainError("degenerate wall: m = 0 makes the coefficients vanish at the wall; "
                          "use the Monte Carlo zero-reserve study instead")
    if not b > p.m:
        raise DomainError(f"barrier b={b:g} must exceed m={p.m:g}")
    if not T > 0:
        raise DomainError("horizon T must be positive")
    if nx < 3 or nt < 1:
        raise DomainError("need nx >= 3 and nt >= 1")
    policy = sol.policy if isinstance(sol, HjbSolution) else sol

    if mesh == "log":
        y = np.linspace(np.log(p.m), np.log(b), nx + 1)
        x = np.exp(y)
        x[0], x[-1] = p.m, b
        lower, main, upper = _log_operator_bands(p, policy, x, y[1] - y[0])
    elif mesh == "uniform":
        x = np.linspace(p.m, b, nx + 1)
        lower, main, upper = _operator_bands(p, policy, x, x[1] - x[0])
    else:
        raise DomainError(f"unknown mesh {mesh!r}")
    dt = T / nt

    # half-size implicit Euler and Crank-Nicolson share the matrix I - (dt/2) A
    half = 0.5 * dt
    dl = -half * lower[1:]
    d = 1.0 - half * main
    du = -half * upper[:-1]
    dl_f, d_f, du_f, du2_f, ipiv, info = lapack.dgttrf(dl, d, du)
    if info != 0:
        raise NumericalError(f"tridiagonal factorisation failed (info={info})")

    def solve(rhs):
        out, info_s = lapack.dgttrs(dl_f, d_f, du_f, du2_f, ipiv, rhs)
        if info_s != 0:
            raise NumericalError(f"tridiagonal solve failed (info={info_s})")
        return out

    u = np.ones(nx)
    n_start = min(rannacher_steps, 2 * nt)
    n_start -= n_start % 2
    rows = [np.concatenate([[0.0], u])] if store_field else None
    for i in range(n_start):
        u = solve(u)
        if store_field and i % 2 == 1:
            rows.append(np.concatenate([[0.0], u]))
    for _ in range(nt - n_start // 2):
        u = solve(u + half * _apply(lower, main, upper, u))
        if store_field:
            rows.append(np.concatenate([[0.0], u]))
    if not np.all(np.isfinite(u)):
        raise NumericalError("non-finite survival field")

    field = np.array(rows) if store_field else np.concatenate([[0.0], u])[None, :]
    violation = float(max(0.0, -field.min(), field.max() - 1.0))
    field = np.clip(field, 0.0, 1.0)
    times = np.linspace(0.0, T, nt + 1) if store_field else np.array([T])
    return SurvivalGrid(barrier=float(b), horizon=float(T), space_nodes=x, time_nodes=times,
                        phi=field, policy=policy, max_violation=violation)


@dataclass(frozen=True)
class RuinEstimate:
    value: float
    refinement_residual: float
    nx: int
    nt: int


def ruin_at_barrier_detail(p: ModelParams, sol, b: float, T: float,
                           opts: PdeOptions | None = None) -> RuinEstimate:
    """psi(T, b; b) with grid doubling until successive values agree to ``opts.tol``."""
    opts = opts or PdeOptions()
    nx, nt = opts.nx, opts.nt
    prev = 1.0 - solve_survival(p, sol, b, T, nx, nt, opts.rannacher_steps,
                          store_field=False, mesh=opts.mesh).final[-1]
    for _ in range(opts.max_doublings):
        nx, nt = 2 * nx, 2 * nt
        cur = 1.0 - solve_survival(p, sol, b, T, nx, nt, opts.rannacher_steps,
                          store_field=False, mesh=opts.mesh).final[-1]
        resid = abs(cur - prev)
        if resid < opts.tol:
            return RuinEstimate(float(cur), float(resid), nx, nt)
        prev = cur
    raise NumericalError(f"survival solve not converged at b={b:g}: last change {resid:.3g} "
                         f"at nx={nx}, nt={nt}")


def ruin_at_barrier(p: ModelParams, sol, b: float, T: float, opts: PdeOptions | None = None) -> float:
    """Ruin probability before T when the reserve starts at the barrier b."""
    return ruin_at_barrier_detail(p, sol, b, T, opts).value


def scan_barriers(p: ModelParams, sol, T: float, bs, opts: PdeOptions | None = None,
                  tol: float = 1e-6) -> list[tuple[float, float]]:
    """psi(T, b; b) over ``bs``; checks the sequence is nonincreasing when bs increases."""
    bs = [float(b) for b in bs]
    for b in bs:
        if not b > p.m:
            raise DomainError(f"barrier b={b:g} must exceed m={p.m:g}")
    out = [(b, ruin_at_barrier(p, sol, b, T, opts)) for b in bs]
    if all(b2 > b1 for b1, b2 in zip(bs, bs[1:])):
        for (b1, v1), (b2, v2) in zip(out, out[1:]):
            if v2 > v1 + tol:
                raise NumericalError(f"ruin probability increased from b={b1:g} ({v1:.6g}) "
                                     f"to b={b2:g} ({v2:.6g})")
    return out
