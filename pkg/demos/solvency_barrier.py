"""Raising the dividend barrier until the one-year ruin probability meets a target.

Prints psi~(b), the ruin probability before T when the reserve starts at the
barrier, then the calibrated barrier b(eps) and the share of value kept.

    python demos/solvency_barrier.py
"""
from dividend_barrier import ModelParams, SolvencyTarget, calibrate, scan_barriers, solve_hjb

p = ModelParams(mu=1.0, sigma2=1.0, sigmap2=2.0, r=0.1, c=0.2, m=1.0)
T = 1.0
sol = solve_hjb(p)

print("b        psi~(b)")
for b, psi in scan_barriers(p, sol, T, [sol.b0, 15.0, 20.0, 30.0, 50.0]):
    print(f"{b:7.3f}  {psi:.6f}")

print("\neps    regime         b*          psi~(b*)   value kept")
for eps in (0.05, 0.1, 0.2, 0.5):
    res = calibrate(p, sol, SolvencyTarget(eps, T))
    print(f"{eps:<5}  {res.regime.value:<13}  {res.barrier:10.6f}  {res.achieved_ruin:.6f}   "
          f"{res.value_ratio:.4f}")
