"""Data series behind the six reference figures.

1: ruin probability before T against initial reserve x, barrier b = 50
2: psi~(b) against the barrier b
3: calibrated barrier b(eps) against eps
4-6: b(eps) for m in {1, 2}, T in {1, 2} and sigma2 in {1, 2}

All series start from the configured model; figures 4-6 override one parameter.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .calibration import b_of_epsilon_curve
from .config import RunConfig
from .errors import DomainError
from .hjb import solve_hjb
from .survival import scan_barriers, solve_survival

EPS_GRID = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)
FIG1_BARRIER = 50.0
FIG1_POINTS = 197
FIG1_REFINE = 16
FIG2_BARRIERS = tuple(np.round(np.concatenate([np.arange(1.5, 10.01, 0.5), np.arange(12.0, 100.01, 2.0)]), 10))
VARIANTS = {4: ("m", (1.0, 2.0)), 5: ("T", (1.0, 2.0)), 6: ("sigma2", (1.0, 2.0))}


@dataclass(frozen=True)
class FigureData:
    figure: int
    name: str
    header: tuple[str, ...]
    rows: list
    # [(label, xs, ys)] for plotting
    series: list
    xlabel: str
    ylabel: str


def _fig1(cfg):
    p, T = cfg.model, cfg.target.horizon
    sol = solve_hjb(p, cfg.hjb)
    n = (FIG1_POINTS - 1) * FIG1_REFINE
    grid = solve_survival(p, sol, FIG1_BARRIER, T, n, n, store_field=False)
    xs = grid.space_nodes[::FIG1_REFINE]
    psi = 1.0 - grid.phi[-1][::FIG1_REFINE]
    return FigureData(1, "figure1_ruin_vs_reserve", ("x", "psi"), list(zip(xs, psi)),
                      [(f"b={FIG1_BARRIER:g}", xs, psi)], "initial reserve x", "ruin probability before T")


def _fig2(cfg):
    p, T = cfg.model, cfg.target.horizon
    sol = solve_hjb(p, cfg.hjb)
    bs = [b for b in FIG2_BARRIERS if b > p.m]
    vals = scan_barriers(p, sol, T, bs, cfg.pde)
    b, psi = np.array(vals).T
    return FigureData(2, "figure2_ruin_vs_barrier", ("b", "psi"), vals, [("psi(T,b;b)", b, psi)],
                      "barrier b", "ruin probability before T from x = b")


def _curve(p, T, cfg):
    sol = solve_hjb(p, cfg.hjb)
    return b_of_epsilon_curve(p, sol, T, EPS_GRID, cfg.pde)


def _fig3(cfg):
    c = _curve(cfg.model, cfg.target.horizon, cfg)
    rows = [(q.epsilon, q.barrier, q.achieved_ruin) for q in c.points]
    return FigureData(3, "figure3_barrier_vs_epsilon", ("epsilon", "b", "achieved_ruin"), rows,
                      [("b(eps)", c.epsilons, c.barriers)], "epsilon", "barrier b(eps)")


def _variant(cfg, fid):
    name, values = VARIANTS[fid]
    rows, series = [], []
    for v in values:
        p, T = cfg.model, cfg.target.horizon
        if name == "T":
            T = v
        else:
            p = p.replace(**{name: v})
        c = _curve(p, T, cfg)
        rows += [(v, q.epsilon, q.barrier, q.achieved_ruin) for q in c.points]
        series.append((f"{name}={v:g}", c.epsilons, c.barriers))
    return FigureData(fid, f"figure{fid}_barrier_vs_epsilon_by_{name}", (name, "epsilon", "b", "achieved_ruin"),
                      rows, series, "epsilon", "barrier b(eps)")


def figure_data(cfg: RunConfig, fid: int) -> FigureData:
    if fid == 1:
        return _fig1(cfg)
    if fid == 2:
        return _fig2(cfg)
    if fid == 3:
        return _fig3(cfg)
    if fid in VARIANTS:
        return _variant(cfg, fid)
    raise DomainError(f"unknown figure id {fid!r}; expected 1-6")


def with_model(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, model=cfg.model.replace(**changes))
