import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dividend_barrier import (DomainError, FreeBoundaryNotFound, InvalidStateError, SolverOptions,
                              build_value, hjb_curvature, homogeneous_policy, solve_hjb, value_ratio)
from dividend_barrier.hjb import generator_max, homogeneous_alpha, hjb_residual

from conftest import REF
from oracles import curvature_brute, free_boundary_rk4

# frozen after checking against the RK4/brute-force oracle below
B0_REF = 10.146237208


def test_free_boundary_matches_frozen_value(sol):
    assert sol.b0 == pytest.approx(B0_REF, abs=1e-8)


def test_free_boundary_matches_independent_integrator(sol):
    assert sol.b0 == pytest.approx(free_boundary_rk4(REF, x_max=12.0), abs=1e-3)


def test_free_boundary_with_interior_policy_matches_oracle():
    # sigma2 = 2 gives an interior retention near m
    p = REF.replace(sigma2=2.0)
    s = solve_hjb(p)
    assert s.x0 > p.m
    assert s.b0 == pytest.approx(free_boundary_rk4(p, x_max=12.0), abs=1e-3)


@pytest.mark.parametrize("x, h, hp", [(5.0, 2.0, 0.4), (1.0, 0.0, 1.0), (1.2, 0.1, 3.0), (20.0, 9.0, 0.2)])
def test_curvature_agrees_with_brute_force_grid(x, h, hp):
    s, a = hjb_curvature(REF.replace(sigma2=2.0), x, h, hp)
    s_ref = curvature_brute(REF.replace(sigma2=2.0), x, h, hp)
    assert s == pytest.approx(s_ref, rel=1e-6, abs=1e-9)
    assert 0.0 <= a <= 1.0


def test_curvature_rejects_nonpositive_slope():
    with pytest.raises(InvalidStateError):
        hjb_curvature(REF, 2.0, 1.0, 0.0)


def test_residual_small_on_every_node(sol):
    assert np.all(np.abs(sol.residuals()) <= sol.residual_tolerance())


def test_structure(sol):
    m = REF.m
    assert sol.h[0] == 0.0
    assert np.all(sol.hp > 0)
    inner = (sol.grid > m) & (sol.grid < sol.b0)
    assert np.all(sol.hpp[inner] < 0)
    xs = np.linspace(sol.b0 * 1.001, 3 * sol.b0, 50)
    assert np.all(sol.hpp_at(xs) > 0)
    assert sol.b0 > sol.x0 >= m


def test_degenerate_policy_at_reference_parameters(sol):
    # full retention throughout: x0 = m, slope 1/x0, alpha_hat = 0, LSQ window empty
    assert sol.x0 == pytest.approx(REF.m)
    assert sol.lam == pytest.approx(1.0)
    assert sol.alpha_hat == pytest.approx(0.0, abs=1e-12)
    assert math.isnan(sol.policy.lsq_slope)
    assert np.all(sol.policy.retention(sol.grid) == 1.0)


def test_interior_policy_is_nearly_linear():
    s = solve_hjb(REF.replace(sigma2=2.0))
    assert s.lam * s.x0 == pytest.approx(1.0)
    assert s.policy.linearity_deviation < 0.05
    a = s.policy.retention(s.grid)
    assert np.all(np.diff(a) >= -1e-12)


@pytest.mark.parametrize("k", [7.0, 0.01, 1e3])
def test_homogeneity_in_initial_slope(sol, k):
    sk = solve_hjb(REF, SolverOptions(hp0=k))
    assert sk.b0 == pytest.approx(sol.b0, rel=1e-8)
    assert sk.x0 == pytest.approx(sol.x0, rel=1e-8)
    ys = np.linspace(REF.m, 2 * sol.b0, 61)
    for b in (sol.b0, 20.0):
        assert np.allclose(build_value(sk, b)(ys), build_value(sol, b)(ys), rtol=1e-8, atol=0)


def test_value_function_pasting(sol):
    for b in (sol.b0, 15.0, 40.0):
        F = build_value(sol, b)
        assert F.derivative(b) == pytest.approx(1.0, rel=1e-10)
        assert F(b + 3.0) == pytest.approx(F.at_barrier + 3.0)
        assert F(REF.m) == 0.0
    assert build_value(sol, 2.0).barrier == sol.b0


def test_generator_nonpositive(sol):
    for b in (sol.b0, 2 * sol.b0):
        xs = np.linspace(REF.m, 1.5 * b, 151)
        F = build_value(sol, b)
        assert np.all(generator_max(sol, b, xs) <= 1e-8 * np.maximum(1.0, REF.c * F(xs)))


def test_value_ratio_below_one_above_free_boundary(sol):
    bs = np.linspace(sol.b0, 5 * sol.b0, 20)
    ratios = [value_ratio(sol, sol.b0, b) for b in bs]
    assert ratios[0] == pytest.approx(1.0)
    assert all(r2 < r1 for r1, r2 in zip(ratios, ratios[1:]))
    with pytest.raises(DomainError):
        value_ratio(sol, 2.0, 20.0)


def test_residual_detects_corrupted_curvature(sol):
    res = hjb_residual(REF, sol.grid, sol.h, sol.hp, 1.1 * sol.hpp)
    assert np.max(np.abs(res) / sol.residual_tolerance()) > 1.0


def test_small_domain_reports_missing_free_boundary():
    with pytest.raises(FreeBoundaryNotFound):
        solve_hjb(REF, SolverOptions(x_max=5.0))


def test_invalid_parameters_rejected():
    with pytest.raises(DomainError):
        solve_hjb(REF.replace(r=0.3))


def test_zero_floor_power_solution():
    p = REF.replace(m=0.0)
    al = homogeneous_alpha(p)
    lam = p.mu / (p.sigma2 * (1 - al))
    assert al == pytest.approx(0.44597, abs=1e-5)
    assert 1.0 / lam == pytest.approx(0.55403, abs=1e-5)
    # x**alpha solves the interior branch for x < x0
    xs = np.linspace(0.05, 0.5, 10)
    h, hp, hpp = xs**al, al * xs ** (al - 1), al * (al - 1) * xs ** (al - 2)
    res = hjb_residual(p, xs, h, hp, hpp)
    assert np.max(np.abs(res) / h) < 1e-10
    pol = homogeneous_policy(p, 10.0)
    assert pol.retention(0.2) == pytest.approx(lam * 0.2)


@settings(max_examples=15, deadline=None)
@given(x=st.floats(1.0, 40.0), h=st.floats(0.0, 20.0), hp=st.floats(0.01, 5.0),
       sigma2=st.floats(0.5, 3.0))
def test_curvature_root_property(x, h, hp, sigma2):
    p = REF.replace(sigma2=sigma2)
    s, a = hjb_curvature(p, x, h, hp)
    g = 0.5 * (p.sigma2 * a * a + p.sigmap2 * x * x) * s + (p.mu * a + p.r * x) * hp - p.c * h
    assert abs(g) <= 1e-10 * max(1.0, p.c * h, (p.mu + p.r * x) * hp)
    # a is the maximiser: no grid retention does better
    grid = np.linspace(0, 1, 501)
    vals = 0.5 * (p.sigma2 * grid**2 + p.sigmap2 * x * x) * s + (p.mu * grid + p.r * x) * hp - p.c * h
    assert vals.max() <= g + 1e-9 * max(1.0, abs(s))
