"""Free boundary of the unconstrained problem, and how the retention policy looks.

At the reference parameters the insurer keeps every claim (a* = 1 on the whole
domain), so the switch point collapses onto the floor m. Doubling the claims
variance brings in an interior policy near m that is close to linear in x.

    python demos/free_boundary.py
"""
import numpy as np

from dividend_barrier import ModelParams, build_value, solve_hjb

base = ModelParams(mu=1.0, sigma2=1.0, sigmap2=2.0, r=0.1, c=0.2, m=1.0)

for label, p in (("reference", base), ("sigma2 = 2", base.replace(sigma2=2.0))):
    sol = solve_hjb(p)
    print(f"{label:>10}: b0 = {sol.b0:.6f}  x0 = {sol.x0:.6f}  lambda = {sol.lam:.6f}  "
          f"max |HJB residual| = {np.abs(sol.residuals()).max():.1e}")
    xs = np.linspace(p.m, sol.x0 + 0.5, 6)
    print("            a*(x) at x =", np.round(xs, 3), "->", np.round(sol.policy.retention(xs), 4))

# value of paying out everything above b, for a few barriers; b0 is the best one
sol = solve_hjb(base)
x = 5.0
for b in (sol.b0, 15.0, 25.0, 40.0):
    print(f"V({x:g}; b = {b:7.3f}) = {build_value(sol, b)(x):.6f}")
