import math

import numpy as np
import pytest
from scipy.stats import norm

from dividend_barrier import (DomainError, SimConfig, build_value, estimate_ruin, estimate_value,
                              homogeneous_policy, simulate_path, solve_survival, zero_reserve_study)
from dividend_barrier.model import PolicyCurve
from dividend_barrier.montecarlo import _run_all

from conftest import REF

# constant coefficients: no investment risk and no interest
FLAT = REF.replace(sigmap2=0.0, r=0.0)


def _full(m):
    xs = np.array([m, m + 1.0])
    return PolicyCurve(switch_point=m, slope=1.0 / m, alpha_hat=0.0, xs=xs, values=np.ones(2), m=m)


def _first_passage(x, m, mu, s2, T):
    d, s = x - m, math.sqrt(s2 * T)
    return norm.cdf((-d - mu * T) / s) + math.exp(-2 * mu * d / s2) * norm.cdf((-d + mu * T) / s)


def test_bridge_is_exact_for_constant_coefficients():
    # coarse steps: the bridge minimum removes all time-discretisation error here
    r = estimate_ruin(FLAT, _full(1.0), SimConfig(40000, 0.05, 1.0, 2.0, 60.0, seed=11))
    exact = _first_passage(2.0, 1.0, 1.0, 1.0, 1.0)
    assert abs(r.ruin_prob - exact) <= 3 * r.ruin_se


def test_projection_misses_crossings():
    cfg = SimConfig(40000, 0.05, 1.0, 2.0, 60.0, seed=11, scheme="projection")
    r = estimate_ruin(FLAT, _full(1.0), cfg)
    assert r.ruin_prob < _first_passage(2.0, 1.0, 1.0, 1.0, 1.0) - 5 * r.ruin_se


def test_reflection_matches_pde_for_constant_coefficients():
    g = solve_survival(FLAT, _full(1.0), 3.0, 1.0, 800, 800)
    r = estimate_ruin(FLAT, _full(1.0), SimConfig(40000, 0.02, 1.0, 2.0, 3.0, seed=5))
    assert abs(r.ruin_prob - g.psi_at(2.0)) <= 3 * r.ruin_se


def test_same_seed_same_numbers(sol):
    cfg = SimConfig(3000, 1e-2, 1.0, 5.0, 10.0, seed=99)
    a, b = estimate_ruin(REF, sol, cfg), estimate_ruin(REF, sol, cfg)
    assert a == b
    c = estimate_ruin(REF, sol, SimConfig(3000, 1e-2, 1.0, 5.0, 10.0, seed=100))
    assert c.ruin_prob != a.ruin_prob


def test_path_results_do_not_depend_on_batching(sol):
    cfg = SimConfig(50, 1e-2, 1.0, 5.0, 10.0, seed=3)
    blk = _run_all(REF, sol.policy, cfg)
    for i in (0, 17, 49):
        out = simulate_path(REF, sol, cfg, index=i)
        assert out.dividends == blk.dividends[i]
        assert out.final_reserve == blk.final[i]
        assert out.ruined == bool(blk.ruined[i])


def test_trajectory_respects_barrier_and_floor(sol):
    cfg = SimConfig(20, 1e-2, 2.0, 5.0, 6.0, seed=1)
    r = estimate_ruin(REF, sol, cfg, n_trace=5)
    assert len(r.traces) == 5
    for tr in r.traces:
        assert np.all(tr[:, 1] <= 6.0 + 1e-12)
        assert np.all(tr[1:-1, 1] > REF.m)
        assert np.all(np.diff(tr[:, 2]) >= 0)


def test_ruin_time_inside_horizon(sol):
    r = estimate_ruin(REF, sol, SimConfig(5000, 1e-2, 1.0, 2.0, 10.0, seed=2))
    assert 0 < r.mean_tau <= 1.0
    assert r.numerical_failures == 0
    assert r.ruin_se == pytest.approx(math.sqrt(r.ruin_prob * (1 - r.ruin_prob) / 5000))


def test_antithetic_pairs_share_a_stream(sol):
    cfg = SimConfig(20000, 1e-2, 1.0, 5.0, 10.0, seed=8, antithetic=True)
    r = estimate_ruin(REF, sol, cfg)
    plain = estimate_ruin(REF, sol, SimConfig(20000, 1e-2, 1.0, 5.0, 10.0, seed=8))
    assert abs(r.ruin_prob - plain.ruin_prob) < 4 * math.hypot(r.ruin_se, plain.ruin_se)


def test_value_estimate_and_truncation(sol):
    cfg = SimConfig(4000, 1e-2, 0.0, sol.b0, sol.b0, seed=4)
    res = estimate_value(REF, sol, cfg, tol=1e-12)
    F = build_value(sol, sol.b0)
    assert res.truncation_bound <= 1e-4 * F(sol.b0) * 1.0001
    assert res.warnings
    assert abs(res.value_estimate - F(sol.b0)) < 3 * res.value_se + 0.05 * F(sol.b0)


def test_zero_reserve_hits_shrink_with_threshold():
    p = REF.replace(m=0.0)
    pol = homogeneous_policy(p, 10.0)
    x0 = pol.switch_point
    study = zero_reserve_study(p, pol, SimConfig(5000, 1e-2, 1.0, 10.0, 10.0, seed=6),
                               [x0 * 2.0**-k for k in range(2, 9)])
    assert study.nonincreasing
    assert len(study.rows()) == 7


@pytest.mark.parametrize("kw", [{"paths": 0}, {"dt": 0.0}, {"initial_reserve": 11.0},
                                {"initial_reserve": 0.5}, {"scheme": "milstein"}])
def test_config_validation(sol, kw):
    args = dict(paths=10, dt=1e-2, horizon=1.0, initial_reserve=5.0, barrier=10.0)
    args.update(kw)
    with pytest.raises(DomainError):
        estimate_ruin(REF, sol, SimConfig(**args))


def test_zero_reserve_study_needs_zero_floor(sol):
    with pytest.raises(DomainError):
        zero_reserve_study(REF, sol, SimConfig(10, 1e-2, 1.0, 5.0, 10.0), [0.5, 0.1])
