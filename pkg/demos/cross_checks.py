"""Three independent views of the same ruin probability.

The survival PDE against a Monte Carlo run of the reflected reserve, then the
closed-form lower bound against the PDE for a reserve starting at the barrier.
The bound is loose, and it has to sit below the PDE value.

    python demos/cross_checks.py
"""
from dividend_barrier import (BoundInput, ModelParams, SimConfig, estimate_ruin, ruin_at_barrier,
                              ruin_lower_bound, solve_hjb, solve_survival)

p = ModelParams(mu=1.0, sigma2=1.0, sigmap2=2.0, r=0.1, c=0.2, m=1.0)
T, b = 1.0, 10.0
sol = solve_hjb(p)
grid = solve_survival(p, sol, b, T, 1600, 1600, store_field=False)

print(f"barrier b = {b:g}")
print("x     PDE       MC (+- SE)")
for x in (2.0, 5.0, 10.0):
    mc = estimate_ruin(p, sol, SimConfig(paths=20000, dt=1e-3, horizon=T, initial_reserve=x, barrier=b, seed=7))
    print(f"{x:<5g} {grid.psi_at(x):.5f}   {mc.ruin_prob:.5f} (+- {mc.ruin_se:.5f})")

print("\nb     psi~(b)   lower bound")
for bb in (1.0, 1.5, 2.0, 5.0, 10.0):
    psi = 1.0 if bb == p.m else ruin_at_barrier(p, sol, bb, T)
    print(f"{bb:<5g} {psi:.5f}   {ruin_lower_bound(BoundInput(bb, T, sol.lam, p)):.3e}")
