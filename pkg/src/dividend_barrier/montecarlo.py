"""Euler-Maruyama simulation of the barrier-controlled reserve.

Each step moves R by drift*dt + sqrt(diffusion_sq*dt)*Z with the feedback retention
a*(R). Within a step the coefficients are frozen, so the path is a Brownian bridge
whose maximum and minimum can be sampled exactly: the part of the maximum above the
barrier b is paid out as dividends, and a minimum at or below m is ruin. Used as an
independent check on the PDE and HJB solvers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .errors import DomainError
from .hjb import HjbSolution, build_value
from .model import ModelParams, PolicyCurve, require_valid
from .rng import _MASK64, inv_norm, philox4x64, to_open_unit

_BLOCK = 1 << 16


@dataclass(frozen=True)
class SimConfig:
    paths: int
    dt: float
    horizon: float
    initial_reserve: float
    barrier: float
    value_horizon: float | None = None
    seed: int = 0
    antithetic: bool = False
    # "bridge": exact per-step extremes of the frozen-coefficient Brownian bridge; "projection": endpoint only
    scheme: str = "bridge"

    @property
    def sim_horizon(self) -> float:
        return self.horizon if self.value_horizon is None else self.value_horizon

    def validate(self, p: ModelParams) -> None:
        if self.paths < 1:
            raise DomainError("paths must be >= 1")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if self.horizon < 0:
            raise DomainError("horizon must be >= 0")
        if self.sim_horizon < self.horizon:
            raise DomainError("value_horizon must be >= horizon")
        if self.scheme not in ("bridge", "projection"):
            raise DomainError(f"unknown scheme {self.scheme!r}")
        if not (p.m <= self.initial_reserve <= self.barrier):
            raise DomainError("need m <= initial_reserve <= barrier")


@dataclass(frozen=True)
class PathOutcome:
    ruined: bool
    tau: float | None
    dividends: float
    final_reserve: float
    failed: bool = False


@dataclass(frozen=True)
class SimResult:
    paths: int
    ruin_prob: float
    ruin_se: float
    value_estimate: float
    value_se: float
    truncation_bound: float
    paths_bankrupt: int
    mean_tau: float
    numerical_failures: int = 0
    warnings: tuple[str, ...] = ()
    traces: list = field(default_factory=list, compare=False, repr=False)


@dataclass
class _Block:
    ruined: np.ndarray
    tau_step: np.ndarray
    dividends: np.ndarray
    final: np.ndarray
    failed: np.ndarray
    running_min: np.ndarray
    traces: list


def _n_steps(h: float, dt: float) -> int:
    return int(math.ceil(h / dt - 1e-9))


@numba.njit(inline="always")
def _retention(x, xs, vals, switch, slope):
    if x >= switch:
        return 1.0
    if x < xs[0]:
        return min(max(slope * x, 0.0), 1.0)
    j = np.searchsorted(xs, x, side="right")
    if j >= xs.size:
        return vals[-1]
    w = (x - xs[j - 1]) / (xs[j] - xs[j - 1])
    return vals[j - 1] + w * (vals[j] - vals[j - 1])


# not cached: the inverse normal is called through a process-specific function pointer
@numba.njit
def _advance(stream_ids, signs, seed, R, L, div, tau, rmin, failed, steps, dt, mu, s2, sp2, r, c, m, b,
             bridge, track_min, xs, vals, switch, slope, trace_slot, trace_buf):
    """Advance every path for ``steps`` steps or until ruin.

    Step k of a path reads the Philox block at counter k + 1: word 0 gives the Gaussian
    increment, word 1 the bridge maximum (reflection at b), word 2 the bridge minimum
    (absorption at m). With bridge=False the last two are ignored.
    """
    sd = np.uint64(seed)
    z = np.uint64(0)
    for i in range(R.size):
        x = R[i]
        if x <= m:
            tau[i] = 0
            continue
        key = np.uint64(stream_ids[i])
        for k in range(steps):
            w0, w1, w2, _ = philox4x64(np.uint64(k + 1), z, z, z, sd, key)
            a = _retention(x, xs, vals, switch, slope)
            v = (a * a * s2 + sp2 * x * x) * dt
            xn = x + (a * mu + r * x) * dt + math.sqrt(v) * signs[i] * inv_norm(to_open_unit(w0))
            t_new = (k + 1) * dt
            # reflection at b: overshoot of the bridge maximum is paid out
            dL = 0.0
            if bridge and v > 0.0:
                u1 = to_open_unit(w1)
                if xn >= b:
                    hit = True
                else:
                    # uniforms are >= 2**-54, so exp(-e) below that can never be hit
                    e = 2.0 * (b - x) * (b - xn) / v
                    hit = e < 38.0 and u1 < math.exp(-e)
                if hit:
                    top = 0.5 * (x + xn + math.sqrt((xn - x) ** 2 - 2.0 * v * math.log(u1)))
                    dL = top - b
            elif xn > b:
                dL = xn - b
            if dL > 0.0:
                xn -= dL
                div[i] += math.exp(-c * t_new) * dL
                L[i] += dL
            # absorption at m: bridge minimum
            dead = False
            if not math.isfinite(xn):
                failed[i] = True
                dead = True
            elif bridge and v > 0.0:
                u2 = to_open_unit(w2)
                if track_min:
                    low = 0.5 * (x + xn - math.sqrt((xn - x) ** 2 - 2.0 * v * math.log(u2)))
                    if low < rmin[i]:
                        rmin[i] = low
                    dead = low <= m
                elif xn <= m:
                    dead = True
                else:
                    # crossing happens at the wall, so use the variance there; freezing it at
                    # x overstates the crossing chance when the diffusion grows with reserve
                    am = _retention(m, xs, vals, switch, slope)
                    vm = (am * am * s2 + sp2 * m * m) * dt
                    e = 2.0 * (x - m) * (xn - m) / vm
                    dead = e < 38.0 and u2 < math.exp(-e)
            else:
                if xn < rmin[i]:
                    rmin[i] = xn
                dead = xn <= m
            x = xn
            s = trace_slot[i]
            if s >= 0:
                trace_buf[s, k + 1, 0] = x
                trace_buf[s, k + 1, 1] = L[i]
            if dead:
                tau[i] = k + 1
                break
        R[i] = x


def _simulate(p: ModelParams, policy: PolicyCurve, cfg: SimConfig, indices: np.ndarray,
              n_trace: int = 0, track_min: bool = False) -> _Block:
    """Simulate the paths in ``indices``; results are in the same order."""
    n = indices.size
    R = np.full(n, float(cfg.initial_reserve))
    div = np.zeros(n)
    L = np.zeros(n)
    tau = np.full(n, -1, dtype=np.int64)
    failed = np.zeros(n, dtype=bool)
    rmin = R.copy()
    steps = _n_steps(cfg.sim_horizon, cfg.dt)
    trace_slot = np.full(n, -1, dtype=np.int64)
    traced = np.nonzero(indices < n_trace)[0]
    trace_slot[traced] = np.arange(traced.size)
    trace_buf = np.full((max(traced.size, 1), steps + 1 if traced.size else 1, 2), np.nan)
    if traced.size:
        trace_buf[:, 0, 0] = cfg.initial_reserve
        trace_buf[:, 0, 1] = 0.0
    if cfg.antithetic:
        stream_ids, signs = indices // 2, np.where(indices % 2 == 1, -1.0, 1.0)
    else:
        stream_ids, signs = indices, np.ones(n)
    xs = np.ascontiguousarray(policy.xs, dtype=float)
    vals = np.ascontiguousarray(policy.values, dtype=float)
    _advance(stream_ids.astype(np.uint64), signs, np.uint64(int(cfg.seed) & _MASK64), R, L, div, tau,
             rmin, failed, steps, cfg.dt, p.mu, p.sigma2, p.sigmap2, p.r, p.c, p.m, cfg.barrier,
             cfg.scheme == "bridge", track_min, xs, vals, float(policy.switch_point),
             float(policy.slope), trace_slot, trace_buf)
    ruined = (tau >= 0) & ~failed
    traces = []
    for i in traced:
        last = tau[i] if tau[i] >= 0 else steps
        t = np.arange(last + 1) * cfg.dt
        traces.append(np.column_stack([t, trace_buf[trace_slot[i], : last + 1]]))
    return _Block(ruined=ruined, tau_step=tau, dividends=div, final=R, failed=failed,
                  running_min=rmin, traces=traces)


def simulate_path(p: ModelParams, policy, cfg: SimConfig, index: int = 0) -> PathOutcome:
    """One path of the reflected/absorbed reserve, using the stream of path ``index``."""
    policy = policy.policy if isinstance(policy, HjbSolution) else policy
    require_valid(p)
    cfg.validate(p)
    blk = _simulate(p, policy, cfg, np.array([index], dtype=np.int64))
    failed = bool(blk.failed[0])
    ruined = bool(blk.ruined[0])
    tau = blk.tau_step[0] * cfg.dt if ruined else None
    return PathOutcome(ruined=ruined, tau=tau, dividends=float(blk.dividends[0]),
                       final_reserve=float(blk.final[0]), failed=failed)


def _run_all(p, policy, cfg, n_trace=0, track_min=False):
    parts = []
    for start in range(0, cfg.paths, _BLOCK):
        idx = np.arange(start, min(cfg.paths, start + _BLOCK), dtype=np.int64)
        parts.append(_simulate(p, policy, cfg, idx, n_trace, track_min))
    return _Block(
        ruined=np.concatenate([q.ruined for q in parts]),
        tau_step=np.concatenate([q.tau_step for q in parts]),
        dividends=np.concatenate([q.dividends for q in parts]),
        final=np.concatenate([q.final for q in parts]),
        failed=np.concatenate([q.failed for q in parts]),
        running_min=np.concatenate([q.running_min for q in parts]),
        traces=[t for q in parts for t in q.traces],
    )


def _summarise(cfg: SimConfig, blk: _Block, truncation_bound: float = 0.0, warnings=()) -> SimResult:
    n = cfg.paths
    horizon_step = _n_steps(cfg.horizon, cfg.dt)
    hit = blk.ruined & (blk.tau_step <= horizon_step)
    p_hat = int(hit.sum()) / n
    se = math.sqrt(p_hat * (1 - p_hat) / n)
    vals = blk.dividends
    mean = math.fsum(vals) / n
    vse = math.sqrt(math.fsum((vals - mean) ** 2) / (n - 1) / n) if n > 1 else 0.0
    taus = blk.tau_step[blk.ruined] * cfg.dt
    mean_tau = math.fsum(taus) / taus.size if taus.size else float("nan")
    return SimResult(paths=n, ruin_prob=p_hat, ruin_se=se, value_estimate=mean, value_se=vse,
                     truncation_bound=truncation_bound, paths_bankrupt=int(blk.ruined.sum()),
                     mean_tau=mean_tau, numerical_failures=int(blk.failed.sum()),
                     warnings=tuple(warnings), traces=blk.traces)


def estimate_ruin(p: ModelParams, policy, cfg: SimConfig, n_trace: int = 0) -> SimResult:
    """Fraction of paths ruined by ``cfg.horizon``, with binomial standard error."""
    policy = policy.policy if isinstance(policy, HjbSolution) else policy
    require_valid(p)
    cfg.validate(p)
    return _summarise(cfg, _run_all(p, policy, cfg, n_trace))


def default_value_horizon(sol: HjbSolution, b: float, x: float, horizon: float = 0.0,
                          rel_tol: float = 1e-4) -> float:
    """Truncation time after which discarded discounted dividends are below rel_tol * F_b(x)."""
    F = build_value(sol, b)
    fb, fx = F.at_barrier, F(x)
    if fx <= 0:
        return horizon
    return max(horizon, math.log(fb / (rel_tol * fx)) / sol.params.c)


def estimate_value(p: ModelParams, sol: HjbSolution, cfg: SimConfig, tol: float | None = None,
                   n_trace: int = 0) -> SimResult:
    """Mean discounted dividends up to ``cfg.value_horizon`` (or the default truncation)."""
    require_valid(p)
    F = build_value(sol, cfg.barrier)
    if cfg.value_horizon is None:
        cfg = SimConfig(**{**cfg.__dict__, "value_horizon": default_value_horizon(
            sol, cfg.barrier, cfg.initial_reserve, cfg.horizon)})
    cfg.validate(p)
    bound = math.exp(-p.c * cfg.value_horizon) * F.at_barrier
    warnings = []
    if tol is not None and bound > tol:
        warnings.append(f"truncation bound {bound:.3g} exceeds tolerance {tol:.3g}")
    return _summarise(cfg, _run_all(p, sol.policy, cfg, n_trace), bound, warnings)


@dataclass(frozen=True)
class ZeroReserveStudy:
    thresholds: tuple[float, ...]
    probabilities: tuple[float, ...]
    paths: int
    nonincreasing: bool
    last_indistinguishable_from_zero: bool

    def rows(self):
        return list(zip(self.thresholds, self.probabilities))


def zero_reserve_study(p: ModelParams, policy, cfg: SimConfig, thresholds) -> ZeroReserveStudy:
    """Probability of the reserve touching each level delta before the horizon, with m = 0."""
    if p.m != 0:
        raise DomainError("zero_reserve_study requires m = 0")
    policy = policy.policy if isinstance(policy, HjbSolution) else policy
    require_valid(p)
    cfg = SimConfig(**{**cfg.__dict__, "value_horizon": cfg.horizon})
    cfg.validate(p)
    thresholds = [float(d) for d in thresholds]
    if any(d <= 0 for d in thresholds) or any(d2 >= d1 for d1, d2 in zip(thresholds, thresholds[1:])):
        raise DomainError("thresholds must be positive and strictly decreasing")
    blk = _run_all(p, policy, cfg, track_min=True)
    probs = tuple(float(np.count_nonzero(blk.running_min <= d)) / cfg.paths for d in thresholds)
    mono = all(q2 <= q1 for q1, q2 in zip(probs, probs[1:]))
    return ZeroReserveStudy(thresholds=tuple(thresholds), probabilities=probs, paths=cfg.paths,
                            nonincreasing=mono, last_indistinguishable_from_zero=probs[-1] <= 3.0 / cfg.paths)
