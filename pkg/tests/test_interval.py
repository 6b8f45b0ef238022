"""Outward rounding checked against exact rational and high-precision decimal arithmetic."""
import math
from decimal import Decimal, localcontext
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dysonrg.interval import Interval, hull, iexp, ilog, ipow_pos, isum

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
positive = st.floats(1e-6, 1e3, allow_nan=False)


def encloses(iv, exact) -> bool:
    return Fraction(iv.lo) <= exact <= Fraction(iv.hi)


@given(finite, finite, finite, finite)
def test_arithmetic_encloses_exact_rational_result(a, b, c, d):
    x, y = Interval(min(a, b), max(a, b)), Interval(min(c, d), max(c, d))
    for p in (min(a, b), max(a, b)):
        for q in (min(c, d), max(c, d)):
            fp, fq = Fraction(p), Fraction(q)
            assert encloses(x + y, fp + fq)
            assert encloses(x - y, fp - fq)
            assert encloses(x * y, fp * fq)
            if y.lo > 1e-3 or y.hi < -1e-3:
                assert encloses(x / y, fp / fq)


@given(st.floats(-30, 30, allow_nan=False))
def test_exp_encloses_high_precision_value(x):
    with localcontext() as ctx:
        ctx.prec = 50
        exact = Decimal(x).exp()
    iv = iexp(Interval(x))
    assert Decimal(iv.lo) <= exact <= Decimal(iv.hi)


@given(positive)
def test_log_encloses_high_precision_value(x):
    with localcontext() as ctx:
        ctx.prec = 50
        exact = Decimal(x).ln()
    iv = ilog(Interval(x))
    assert Decimal(iv.lo) <= exact <= Decimal(iv.hi)


@given(positive, st.floats(-3, 3, allow_nan=False))
def test_power_encloses_high_precision_value(x, p):
    with localcontext() as ctx:
        ctx.prec = 50
        exact = (Decimal(p) * Decimal(x).ln()).exp()
    iv = ipow_pos(Interval(x), p)
    assert Decimal(iv.lo) <= exact <= Decimal(iv.hi)


@given(st.lists(finite, min_size=1, max_size=50))
def test_isum_encloses_exact_sum(vals):
    arr = np.array(vals)
    assert encloses(isum(Interval(arr, arr)), sum(Fraction(v) for v in vals))


def test_division_by_interval_containing_zero_raises():
    with pytest.raises(ZeroDivisionError):
        Interval(1.0) / Interval(-1.0, 1.0)


def test_empty_interval_rejected():
    with pytest.raises(ValueError):
        Interval(2.0, 1.0)


def test_log_of_nonpositive_rejected():
    with pytest.raises(ValueError):
        ilog(Interval(0.0, 1.0))


def test_abs_and_hull():
    assert abs(Interval(-2.0, 1.0)) == Interval(0.0, 2.0)
    assert abs(Interval(-3.0, -1.0)) == Interval(1.0, 3.0)
    h = hull(Interval(0.0, 1.0), 3.0, Interval(-1.0, 0.5))
    assert (h.lo, h.hi) == (-1.0, 3.0)


def test_array_endpoints_round_outward_elementwise():
    a = Interval(np.array([0.1, 0.2]), np.array([0.1, 0.2]))
    s = a + Interval(np.array([0.2, 0.1]))
    assert np.all(s.lo < 0.30000000000000004) and np.all(s.hi >= 0.30000000000000004)
    assert 0.3 in s[0] and math.isclose(s.mid[1], 0.3)
