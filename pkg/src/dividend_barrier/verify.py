"""Cross-check battery: every solver output is tested against an independent one."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .bounds import check_bound
from .calibration import TOL_CAL, Regime, b_of_epsilon_curve, calibrate
from .config import RunConfig
from .hjb import build_value, generator_max, hjb_residual, solve_hjb
from .montecarlo import SimConfig, estimate_ruin, estimate_value
from .survival import scan_barriers, solve_survival

EPS_GRID = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    # worst-case slack: >= 0 when the check passes
    margin: float
    detail: str
    seconds: float = 0.0


def _hjb_residual(sol, hpp_scale):
    res = np.abs(hjb_residual(sol.params, sol.grid, sol.h, sol.hp, sol.hpp * hpp_scale))
    tol = sol.residual_tolerance()
    worst = float(np.max(res / tol))
    return Check("hjb_residual", worst <= 1.0, 1.0 - worst,
                 f"max |residual|/tol = {worst:.3g} over {sol.grid.size} nodes")


def _hjb_structure(sol):
    m = sol.params.m
    inner = (sol.grid > m) & (sol.grid < sol.b0)
    # h'' < 0 strictly inside (m, b0) and > 0 just past b0: exactly one sign change
    past = sol.hpp_at(sol.b0 * (1 + 1e-3))
    ok = (sol.h[0] == 0.0 and bool(np.all(sol.hp > 0)) and bool(np.all(sol.hpp[inner] < 0))
          and past > 0 and sol.b0 > sol.x0)
    return Check("hjb_structure", ok, min(float(sol.hp.min()), sol.b0 - sol.x0),
                 f"b0 = {sol.b0:.10g}, x0 = {sol.x0:.10g}, min h' = {sol.hp.min():.3g}")


def _homogeneity(p, sol, k=7.0):
    sk = solve_hjb(p, replace(sol.options, hp0=k))
    xs = np.linspace(p.m, sol.b0, 201)
    rel = [abs(sk.b0 - sol.b0) / sol.b0, abs(sk.x0 - sol.x0) / sol.x0,
           float(np.max(np.abs(sk.policy.retention(xs) - sol.policy.retention(xs))))]
    for b in (sol.b0, 1.5 * sol.b0):
        F1, Fk = build_value(sol, b), build_value(sk, b)
        ys = np.linspace(p.m, 2 * b, 101)[1:]
        rel.append(float(np.max(np.abs(Fk(ys) - F1(ys)) / np.abs(F1(ys)))))
    worst = max(rel)
    return Check("hjb_homogeneity", worst <= 1e-8, 1e-8 - worst, f"max relative change {worst:.3g} for hp(m) = {k:g}")


def _generator(sol):
    worst = -math.inf
    for b in (sol.b0, 1.5 * sol.b0, 3.0 * sol.b0):
        xs = np.linspace(sol.params.m, 1.5 * b, 301)
        F = build_value(sol, b)
        tol = 1e-8 * np.maximum(1.0, sol.params.c * F(xs))
        worst = max(worst, float(np.max(generator_max(sol, b, xs) / tol)))
    return Check("generator_inequality", worst <= 1.0, 1.0 - worst, f"max L F_b / tol = {worst:.3g}")


def _value_monotone(sol):
    bs = np.linspace(sol.b0, 4 * sol.b0, 31)
    hp = sol.hp_at(bs)
    d = float(np.min(np.diff(hp)))
    return Check("value_decreasing_in_barrier", d > 0, d, f"min increment of h'(b) = {d:.3g}")


def _pde_vs_mc(cfg, sol, seed):
    p, T = cfg.model, cfg.target.horizon
    worst, parts = -math.inf, []
    for b in (10.0, 50.0):
        if b <= p.m:
            continue
        grid = solve_survival(p, sol, b, T, 3200, 3200, store_field=False)
        for x in (2.0, 5.0, 10.0):
            if not p.m < x <= b:
                continue
            pde = grid.psi_at(x)
            r = estimate_ruin(p, sol, SimConfig(cfg.mc.paths, cfg.mc.dt, T, x, b, seed=seed,
                                                antithetic=cfg.mc.antithetic))
            z = abs(r.ruin_prob - pde) / max(r.ruin_se, 1e-300)
            worst = max(worst, z)
            parts.append(f"b={b:g},x={x:g}: {z:.2f} SE")
    return Check("pde_vs_mc", worst <= 3.0, 3.0 - worst, "; ".join(parts))


def value_identity(p, sol, xs, paths, dt, seed, antithetic=False):
    """Per-point comparison of J from simulation with F_b0. Returns rows of diagnostics."""
    F = build_value(sol, sol.b0)
    rows = []
    for x in xs:
        r1 = estimate_value(p, sol, SimConfig(paths, dt, 0.0, x, sol.b0, seed=seed, antithetic=antithetic))
        r2 = estimate_value(p, sol, SimConfig(paths, dt / 2, 0.0, x, sol.b0, seed=seed, antithetic=antithetic))
        delta = abs(r1.value_estimate - r2.value_estimate)
        stable = delta <= 3.0 * math.hypot(r1.value_se, r2.value_se)
        allowance = 3.0 * r1.value_se + r1.truncation_bound + 2.0 * delta
        err = abs(r1.value_estimate - F(x))
        rows.append({"x": float(x), "F": float(F(x)), "J": r1.value_estimate, "se": r1.value_se,
                     "J_half": r2.value_estimate, "se_half": r2.value_se, "truncation": r1.truncation_bound,
                     "bias_allowance": 2.0 * delta, "error": err, "allowance": allowance,
                     "stable": stable, "passed": stable and err <= allowance})
    return rows


def _value_identity(cfg, sol, seed):
    p = cfg.model
    xs = [x for x in (2.0, 5.0, sol.b0) if p.m < x <= sol.b0]
    rows = value_identity(p, sol, xs, cfg.mc.paths, cfg.mc.dt, seed, cfg.mc.antithetic)
    margin = min(r["allowance"] - r["error"] for r in rows)
    detail = "; ".join(f"x={r['x']:.4g}: |J-F|={r['error']:.3g} <= {r['allowance']:.3g}" for r in rows)
    return Check("value_identity", all(r["passed"] for r in rows), margin, detail)


def _bound(cfg, sol):
    p = cfg.model
    bs = [b for b in (1.5, 2.0, 5.0, 10.0) if b > p.m]
    rep = check_bound(p, sol, bs, cfg.target.horizon, opts=cfg.pde)
    margin = min(r.margin + r.tol for r in rep.rows)
    return Check("bound_dominance", rep.passed, margin,
                 "; ".join(f"b={r.b:g}: psi={r.ruin:.4g} >= {r.bound:.4g}" for r in rep.rows))


def _ruin_monotone(cfg, sol):
    bs = [b for b in (5.0, 10.0, 20.0, 50.0, 100.0) if b > cfg.model.m]
    vals = scan_barriers(cfg.model, sol, cfg.target.horizon, bs, cfg.pde)
    d = [v1 - v2 for (_, v1), (_, v2) in zip(vals, vals[1:])]
    return Check("ruin_decreasing_in_barrier", min(d) >= -1e-6, min(d),
                 ", ".join(f"psi({b:g})={v:.5g}" for b, v in vals))


def _calibration(cfg, sol):
    res = calibrate(cfg.model, sol, cfg.target, cfg.pde)
    gap = abs(res.achieved_ruin - res.epsilon)
    if res.regime is Regime.CONSTRAINED:
        ok = gap <= TOL_CAL and res.value_ratio < 1.0 and res.barrier >= sol.b0
        margin = min(TOL_CAL - gap, 1.0 - res.value_ratio)
    else:
        ok = res.barrier == sol.b0 and res.achieved_ruin <= res.epsilon and res.value_ratio == 1.0
        margin = res.epsilon - res.achieved_ruin
    return Check("calibration", ok, margin,
                 f"{res.regime.value}: b = {res.barrier:.10g}, psi = {res.achieved_ruin:.6g}, "
                 f"ratio = {res.value_ratio:.6g}"), res


def _b_eps_monotone(cfg, sol):
    curve = b_of_epsilon_curve(cfg.model, sol, cfg.target.horizon, EPS_GRID, cfg.pde)
    b = curve.barriers
    d = float(np.min(b[:-1] - b[1:])) if b.size > 1 else 0.0
    ok = not curve.failed and d >= 0
    return Check("barrier_decreasing_in_epsilon", ok, d,
                 ", ".join(f"b({e:g})={v:.6g}" for e, v in zip(curve.epsilons, b)))


def run_checks(cfg: RunConfig, sol=None, seed: int | None = None, hpp_scale: float = 1.0):
    """Run the battery. ``hpp_scale`` != 1 corrupts h'' before the residual check (fault injection).

    Returns (checks, extras) where extras holds the solution and calibration result.
    """
    seed = cfg.seed if seed is None else seed
    t0 = time.perf_counter()
    sol = sol or solve_hjb(cfg.model, cfg.hjb)
    checks = []

    def timed(fn, *args):
        t = time.perf_counter()
        out = fn(*args)
        chk, extra = (out if isinstance(out, tuple) else (out, None))
        checks.append(replace(chk, seconds=time.perf_counter() - t))
        return extra

    timed(_hjb_residual, sol, hpp_scale)
    timed(_hjb_structure, sol)
    timed(_homogeneity, cfg.model, sol)
    timed(_generator, sol)
    timed(_value_monotone, sol)
    timed(_bound, cfg, sol)
    timed(_ruin_monotone, cfg, sol)
    cal = timed(_calibration, cfg, sol)
    timed(_b_eps_monotone, cfg, sol)
    timed(_pde_vs_mc, cfg, sol, seed)
    timed(_value_identity, cfg, sol, seed)
    return checks, {"solution": sol, "calibration": cal, "seconds": time.perf_counter() - t0}
