"""Spin polynomials against brute-force evaluation on every configuration."""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dysonrg.algebra import (
    NormWeights,
    SpinPolynomial,
    Support,
    SupportTooLarge,
    WindowError,
    coefficients_from_values,
    constant,
    dumps,
    evaluate,
    loads,
    make_poly,
    monomial,
    multiply,
    prune,
    shift,
    values_on,
    weighted_norm,
)
from dysonrg.interval import Interval
from strategies import polys

weights = st.builds(NormWeights, st.floats(0, 2), st.floats(0, 2))


def all_assignments(sup):
    for cfg in range(sup.size):
        yield cfg, sup.spins(cfg)


def naive_coefficients(values, sup):
    """``(1/N) sum_config sigma(X) s(Y) g(config)`` one key at a time."""
    out = {}
    for mask in range(sup.size):
        x, y = sup.key(mask)
        acc = 0.0
        for cfg, (sig, blk) in all_assignments(sup):
            sign = math.prod(sig[i] for i in x) * math.prod(blk[j] for j in y)
            acc += sign * values[cfg]
        if abs(acc) > 1e-12:
            out[(x, y)] = acc / sup.size
    return out


@given(polys())
@settings(max_examples=60)
def test_dense_values_match_termwise_evaluation(p):
    sup = Support.covering(p)
    vals = values_on(p, sup)
    for cfg, (sig, blk) in all_assignments(sup):
        assert abs(vals[cfg] - evaluate(p, sig, blk)) < 1e-12


@given(polys(sigma=(0, 3), block=(-2, 0), max_terms=4))
@settings(max_examples=25)
def test_inverse_transform_matches_naive_projection(p):
    sup = Support.covering(p)
    vals = values_on(p, sup)
    fast = coefficients_from_values(vals, sup)
    slow = naive_coefficients(vals, sup)
    assert set(slow) <= set(fast.terms)
    for k, v in fast.items():
        assert abs(v - slow.get(k, 0.0)) < 1e-12


@given(polys(), polys())
@settings(max_examples=60)
def test_product_is_pointwise_product(p, q):
    prod = multiply(p, q, eps=0.0)
    sup = Support.covering(p, q)
    for cfg, (sig, blk) in all_assignments(sup):
        assert abs(evaluate(prod, sig, blk) - evaluate(p, sig, blk) * evaluate(q, sig, blk)) < 1e-10


@given(polys(), polys(), weights)
def test_norm_is_submultiplicative(p, q, w):
    assert weighted_norm(multiply(p, q, w, eps=0.0), w) <= weighted_norm(p, w) * weighted_norm(q, w) * (1 + 1e-12)


@given(polys(), polys(), weights)
def test_norm_is_subadditive(p, q, w):
    assert weighted_norm(p + q, w) <= (weighted_norm(p, w) + weighted_norm(q, w)) * (1 + 1e-12)


@given(polys())
def test_transform_roundtrip(p):
    sup = Support.covering(p)
    back = coefficients_from_values(values_on(p, sup), sup)
    assert weighted_norm(back - p) < 1e-12


@given(polys())
def test_interval_values_enclose_float_values(p):
    sup = Support.covering(p)
    f = values_on(p, sup)
    iv = values_on(p.to_interval(), sup)
    assert np.all(iv.lo <= f) and np.all(f <= iv.hi)


@given(polys())
def test_serialization_roundtrip(p):
    q, const = loads(dumps(p, 1.25))
    assert q == p and const == 1.25


def test_serialization_of_intervals():
    p = SpinPolynomial({((0,), (-1,)): Interval(0.1, 0.2)})
    q, const = loads(dumps(p))
    assert const is None and q.coef((0,), (-1,)) == Interval(0.1, 0.2)


def test_loads_rejects_garbage():
    with pytest.raises(ValueError):
        loads("X={0} coef=1.0")


def test_weighted_norm_by_hand():
    p = make_poly([((0, 1), (), 2.0), ((), (-1,), -0.5), ((0,), (-1, -2), 1.0)])
    w = NormWeights(1.0, 0.5)
    assert math.isclose(weighted_norm(p, w), 2 * math.e ** 2 + 0.5 * math.e ** 0.5 + math.e ** 2)


def test_make_poly_sums_repeats_and_drops_zero():
    p = make_poly([((1, 0), (), 1.0), ((0, 1), (), 2.0), ((2,), (), 1.0), ((2,), (), -1.0)])
    assert p.coef((0, 1)) == 3.0 and len(p) == 1


def test_spins_square_to_one():
    a = monomial((0, 3), (-1,))
    assert a * a == constant(1.0)


def test_shift_moves_keys():
    p = shift(monomial((0, 2), (-1,), 2.0), 2, -1)
    assert p.coef((2, 4), (-2,)) == 2.0


def test_prune_records_loss():
    p = make_poly([((0,), (), 1.0), ((1,), (), 1e-16), ((2,), (-1,), -2e-16)])
    w = NormWeights(1.0, 1.0)
    q = prune(p, w, eps=1e-14)
    assert len(q) == 1
    assert math.isclose(q.prune_loss, 1e-16 * math.e + 2e-16 * math.e ** 2)


def test_window_and_support_caps():
    with pytest.raises(WindowError):
        SpinPolynomial({((5,), ()): 1.0}, window_sigma=(0, 4))
    with pytest.raises(SupportTooLarge):
        SpinPolynomial({(tuple(range(30)), ()): 1.0})


def test_negative_weights_rejected():
    with pytest.raises(ValueError):
        NormWeights(-1.0)


def test_support_masks_roundtrip():
    sup = Support((0, 2, 5), (-3, 0))
    for x in itertools.chain.from_iterable(itertools.combinations(sup.sigma, r) for r in range(4)):
        for y in ((), (-3,), (-3, 0)):
            assert sup.key(sup.mask(x, y)) == (x, y)
