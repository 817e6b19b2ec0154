"""Command-line front end.

    python -m dividend_barrier {hjb,calibrate,figure,verify} --config CFG [--out DIR]
                               [--figure ID] [--seed U64] [--svg]

Exit codes: 0 success, 1 verification failure, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from .calibration import Regime, calibrate
from .config import RunConfig, load_config
from .errors import ConfigError, DividendBarrierError, DomainError
from .figures import figure_data
from .hjb import solve_hjb
from .report import write_csv, write_summary, write_svg
from .verify import run_checks

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _hjb_fields(sol) -> dict:
    return {"b0": sol.b0, "x0": sol.x0, "lambda_hat": sol.lam, "alpha_hat": sol.alpha_hat,
            "lsq_slope": sol.policy.lsq_slope, "linearity_deviation": sol.policy.linearity_deviation,
            "max_hjb_residual": float(abs(sol.residuals()).max())}


def _summary(command: str, cfg: RunConfig, **fields) -> dict:
    base = {"command": command, "inputs": cfg.echo(), "b0": None, "x0": None, "lambda_hat": None,
            "alpha_hat": None, "regime": None, "barrier": None, "achieved_ruin": None, "value_ratio": None,
            "bound_check": None, "mc_check": None, "timings": {}, "files": []}
    base.update(fields)
    return base


def _write_hjb_csv(out: Path, sol) -> Path:
    a = sol.policy.retention(sol.grid)
    return write_csv(out / "hjb_solution.csv", ("x", "h", "hp", "hpp", "a"),
                     zip(sol.grid, sol.h, sol.hp, sol.hpp, a))


def cmd_hjb(cfg: RunConfig, out: Path, **_) -> int:
    t = time.perf_counter()
    sol = solve_hjb(cfg.model, cfg.hjb)
    elapsed = time.perf_counter() - t
    path = _write_hjb_csv(out, sol)
    write_summary(out / "summary.json", _summary("hjb", cfg, **_hjb_fields(sol),
                                                 timings={"hjb": elapsed}, files=[path.name]))
    return EXIT_OK


def cmd_calibrate(cfg: RunConfig, out: Path, **_) -> int:
    t = time.perf_counter()
    sol = solve_hjb(cfg.model, cfg.hjb)
    t_hjb = time.perf_counter() - t
    res = calibrate(cfg.model, sol, cfg.target, cfg.pde)
    t_cal = time.perf_counter() - t - t_hjb
    rows = [(i, st.phase, st.lo, st.hi, st.hi - st.lo, st.b, st.psi) for i, st in enumerate(res.trace)]
    if res.regime is Regime.UNCONSTRAINED:
        rows.append((0, "unconstrained", res.b0, res.b0, 0.0, res.b0, res.ruin_at_b0))
    path = write_csv(out / "calibration.csv", ("step", "phase", "lo", "hi", "width", "evaluated_b", "psi"), rows)
    hjb_path = _write_hjb_csv(out, sol)
    write_summary(out / "summary.json", _summary(
        "calibrate", cfg, **_hjb_fields(sol), regime=res.regime.value, barrier=res.barrier,
        achieved_ruin=res.achieved_ruin, value_ratio=res.value_ratio, ruin_at_b0=res.ruin_at_b0,
        bracket=list(res.bracket), timings={"hjb": t_hjb, "calibrate": t_cal},
        files=[hjb_path.name, path.name]))
    return EXIT_OK


def cmd_figure(cfg: RunConfig, out: Path, figure: int | None = None, svg: bool = False, **_) -> int:
    if figure is None:
        raise ConfigError("figure command needs --figure 1..6")
    t = time.perf_counter()
    data = figure_data(cfg, figure)
    elapsed = time.perf_counter() - t
    files = [write_csv(out / f"{data.name}.csv", data.header, data.rows).name]
    if svg:
        files.append(write_svg(out / f"{data.name}.svg", data.series, data.xlabel, data.ylabel,
                               f"Figure {figure}").name)
    write_summary(out / "summary.json", _summary("figure", cfg, figure=figure,
                                                 timings={"figure": elapsed}, files=files))
    return EXIT_OK


def cmd_verify(cfg: RunConfig, out: Path, **_) -> int:
    checks, extra = run_checks(cfg)
    sol, cal = extra["solution"], extra["calibration"]
    # wall-clock times go to the summary only, so the CSV is reproducible
    rows = [(c.name, c.passed, c.margin, c.detail) for c in checks]
    path = write_csv(out / "verify.csv", ("check", "passed", "margin", "detail"), rows)
    by_name = {c.name: c for c in checks}
    failed = [c.name for c in checks if not c.passed]
    write_summary(out / "summary.json", _summary(
        "verify", cfg, **_hjb_fields(sol), regime=cal.regime.value, barrier=cal.barrier,
        achieved_ruin=cal.achieved_ruin, value_ratio=cal.value_ratio,
        bound_check=by_name["bound_dominance"].passed, mc_check=by_name["pde_vs_mc"].passed,
        checks=[{"name": c.name, "passed": c.passed, "margin": c.margin, "detail": c.detail} for c in checks],
        failed=failed, timings={c.name: c.seconds for c in checks}, files=[path.name]))
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
    if failed:
        print("failed checks: " + ", ".join(failed), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {"hjb": cmd_hjb, "calibrate": cmd_calibrate, "figure": cmd_figure, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dividend_barrier", description="Dividend barrier solvers and cross-checks.")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default="out", help="output directory (default: out)")
    ap.add_argument("--figure", type=int, choices=range(1, 7), metavar="{1..6}")
    ap.add_argument("--seed", type=int, help="override the configured seed")
    ap.add_argument("--svg", action="store_true", help="also render figures as SVG")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 1 << 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = replace(cfg, seed=args.seed)
        return COMMANDS[args.command](cfg, Path(args.out), figure=args.figure, svg=args.svg)
    except (ConfigError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DividendBarrierError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
