import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dividend_barrier import BoundInput, DomainError, check_bound, ruin_lower_bound
from dividend_barrier.bounds import kappa, norm_cdf, norm_sf

from conftest import REF


def test_closed_form_at_the_floor():
    # lambda = mu = 1, r = 0, T = 1, sigmap2 = 2: the tail factor is 4 * (1/2)^2 = 1
    p = REF.replace(r=0.0)
    assert ruin_lower_bound(BoundInput(p.m, 1.0, 1.0, p)) == pytest.approx(math.exp(-0.5), abs=1e-15)


def test_floor_value_with_investment_return():
    val = ruin_lower_bound(BoundInput(REF.m, 1.0, 1.0, REF))
    assert val == math.exp(-(1.0 + 0.1) ** 2 / 2.0)


def test_normal_tail_accuracy():
    assert norm_cdf(1.96) == pytest.approx(0.9750021048517795, abs=1e-12)
    z = np.linspace(-8, 8, 161)
    assert np.allclose(norm_cdf(z) + norm_cdf(-z), 1.0, atol=1e-15)
    # far tail keeps relative accuracy
    assert norm_sf(10.0) == pytest.approx(7.619853024160527e-24, rel=1e-12)


def test_kappa():
    assert kappa(REF.replace(m=2.0), 3.0) == pytest.approx((9.0 + 2.0) * 4.0)


@pytest.mark.parametrize("inp", [
    BoundInput(10.0, 1.0, 1.0, REF.replace(m=0.0)),
    BoundInput(10.0, 1.0, 1.0, REF.replace(sigmap2=0.0)),
    BoundInput(0.5, 1.0, 1.0, REF),
    BoundInput(10.0, 0.0, 1.0, REF),
    BoundInput(10.0, 1.0, 0.0, REF),
])
def test_domain_errors(inp):
    with pytest.raises(DomainError):
        ruin_lower_bound(inp)


pos = st.floats(min_value=0.05, max_value=5.0)


@settings(max_examples=80)
@given(b=st.floats(1.0, 50.0), db=st.floats(0.01, 10.0), T=pos, lam=pos)
def test_bound_in_unit_interval_and_decreasing_in_barrier(b, db, T, lam):
    e1 = ruin_lower_bound(BoundInput(b, T, lam, REF))
    e2 = ruin_lower_bound(BoundInput(b + db, T, lam, REF))
    assert 0.0 <= e2 <= e1 <= 1.0


@settings(max_examples=60)
@given(m=st.floats(0.2, 3.0), dm=st.floats(0.05, 2.0), lam=pos)
def test_bound_increasing_in_floor(m, dm, lam):
    b = 5.0 + m + dm
    e1 = ruin_lower_bound(BoundInput(b, 1.0, lam, REF.replace(m=m)))
    e2 = ruin_lower_bound(BoundInput(b, 1.0, lam, REF.replace(m=m + dm)))
    assert e2 >= e1


@settings(max_examples=60)
@given(s=st.floats(0.5, 4.0), ds=st.floats(0.1, 4.0), b=st.floats(1.0, 6.0))
def test_bound_increasing_in_investment_volatility(s, ds, b):
    e1 = ruin_lower_bound(BoundInput(b, 1.0, 1.0, REF.replace(sigmap2=s)))
    e2 = ruin_lower_bound(BoundInput(b, 1.0, 1.0, REF.replace(sigmap2=s + ds)))
    assert e2 >= e1


def test_bound_strictly_positive_for_finite_barrier():
    assert ruin_lower_bound(BoundInput(30.0, 1.0, 1.0, REF)) > 0.0


def test_dominance(sol):
    rep = check_bound(REF, sol, [1.5, 2.0, 5.0, 10.0], 1.0)
    assert rep.passed
    assert rep.lam == sol.lam
    assert all(r.ruin >= r.bound - r.tol for r in rep.rows)
    bounds = [r.bound for r in rep.rows]
    assert all(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:]))


def test_dominance_holds_for_larger_floor():
    from dividend_barrier import solve_hjb
    p = REF.replace(m=2.0)
    assert check_bound(p, solve_hjb(p), [2.5, 5.0], 1.0).passed
