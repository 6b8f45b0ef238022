"""Block sums against direct enumeration over the two summed spins."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dysonrg.algebra import NormWeights, SpinPolynomial, Support, evaluate, make_poly, monomial, weighted_norm
from dysonrg.interval import Interval
from dysonrg.rgmap import (
    BlockKernel,
    FTable,
    HamiltonianSpec,
    KernelError,
    block_expectation,
    block_sum_out,
    canonical_class,
    contraction_components,
    contraction_diagnostic,
    expectation,
    get_kernel,
    hamiltonian_hat,
    reindex,
    renormalized_hamiltonian,
    rg_F,
    rg_step,
    rho,
    rho_inverse,
    toy_chain_partition,
)
from strategies import boundary_polys, polys

KERNELS = ["decimation", "majority"]


def external_support(c, extra=()):
    sig, blk = set(), {0}
    for p in (c,) + tuple(extra):
        sig.update(i for i in p.sigma_sites if i >= 2)
        blk.update(p.block_sites)
    return Support(tuple(sorted(sig)), tuple(sorted(blk)))


def brute_log_partition(c, kernel, sig, blk):
    """``log sum_{sigma_0, sigma_1} k(sigma_0, sigma_1; s_0) exp(c)`` at one external configuration."""
    terms = []
    for s0 in (1, -1):
        for s1 in (1, -1):
            k = kernel(s0, s1, blk[0])
            if k > 0:
                full = {**sig, 0: s0, 1: s1}
                terms.append(k * math.exp(evaluate(c, full, blk)))
    return math.log(math.fsum(terms))


def brute_expectation(g, c, kernel, sig, blk):
    num, den = [], []
    for s0 in (1, -1):
        for s1 in (1, -1):
            k = kernel(s0, s1, blk[0])
            full = {**sig, 0: s0, 1: s1}
            wgt = k * math.exp(evaluate(c, full, blk))
            num.append(wgt * evaluate(g, full, blk))
            den.append(wgt)
    return math.fsum(num) / math.fsum(den)


# -- kernels ---------------------------------------------------------------------

@pytest.mark.parametrize("name", KERNELS)
def test_kernels_are_normalized_probabilities(name):
    k = get_kernel(name)
    for s0 in (1, -1):
        for s1 in (1, -1):
            assert k(s0, s1, 1) + k(s0, s1, -1) == 1.0


def test_majority_kernel_table():
    k = get_kernel("majority")
    assert k(1, 1, 1) == 1.0 and k(-1, -1, 1) == 0.0 and k(1, -1, 1) == 0.5


def test_bad_kernels_rejected():
    with pytest.raises(KernelError):
        BlockKernel.from_function(lambda a, b, s: 0.7)
    with pytest.raises(KernelError):
        BlockKernel.from_function(lambda a, b, s: 1.5 if s > 0 else -0.5)
    with pytest.raises(KernelError):
        get_kernel("nope")


# -- the block sum ---------------------------------------------------------------

@pytest.mark.parametrize("name", KERNELS)
@given(c=boundary_polys())
@settings(max_examples=25)
def test_block_sum_matches_enumeration(name, c):
    kernel = get_kernel(name)
    ft = block_sum_out(c, kernel)
    sup = external_support(c)
    for cfg in range(sup.size):
        sig, blk = sup.spins(cfg)
        got = ft.const + evaluate(ft.poly, sig, blk)
        assert abs(got - brute_log_partition(c, kernel, sig, blk)) < 1e-12


@pytest.mark.parametrize("name", KERNELS)
def test_block_sum_at_seed_matches_enumeration(name, majority, decimation):
    seed, base = majority if name == "majority" else decimation
    ft = block_sum_out(base, seed.kernel)
    sup = external_support(base)
    for cfg in range(sup.size):
        sig, blk = sup.spins(cfg)
        assert abs(ft.const + evaluate(ft.poly, sig, blk) - brute_log_partition(base, seed.kernel, sig, blk)) < 1e-11


def test_majority_nearest_neighbour_class_by_projection(majority):
    """h'({-1, 0}) sums the s_{j-1} s_j projections of the enumerated log partition over all j."""
    seed, base = majority
    ft = block_sum_out(base, seed.kernel)
    sup = external_support(base)
    pairs = [(j - 1, j) for j in sup.block if j - 1 in sup.block]
    acc = []
    for cfg in range(sup.size):
        sig, blk = sup.spins(cfg)
        logz = brute_log_partition(base, seed.kernel, sig, blk)
        acc.extend(blk[a] * blk[b] * logz for a, b in pairs)
    direct = math.fsum(acc) / sup.size
    ren = renormalized_hamiltonian(ft)
    assert abs(ren.classes[(-1, 0)] - direct) < 1e-11


@pytest.mark.parametrize("gamma", [0.5, 1.0, 5.0, 40.0])
def test_decimation_fixed_point_is_exact(gamma):
    c0 = make_poly([((0,), (-1,), gamma)])
    h0, _ = hamiltonian_hat(HamiltonianSpec(gamma))
    f, ft = rg_step(c0 + h0, get_kernel("decimation"))
    assert weighted_norm(f - c0, NormWeights(1.0)) < 1e-12
    ren = renormalized_hamiltonian(ft)
    assert abs(ren.classes[(-1, 0)] - 0.5 * math.log(math.cosh(2 * gamma))) < 1e-12
    assert len([v for v in ren.classes.values() if abs(v) > 1e-12]) == 1


def test_interval_block_sum_encloses_float(majority):
    seed, base = majority
    fl = block_sum_out(base, seed.kernel)
    iv = block_sum_out(base.to_interval(), seed.kernel)
    assert iv.const.lo <= fl.const <= iv.const.hi
    for k, v in iv.poly.items():
        assert v.lo <= fl.poly.coef(*k) <= v.hi
        assert v.width < 1e-10


def test_boundary_keys_validated():
    with pytest.raises(ValueError):
        block_sum_out(monomial((2,), (-1,)), get_kernel("majority"))
    with pytest.raises(ValueError):
        block_sum_out(monomial((0,), (0,)), get_kernel("majority"))


def test_ftable_key_validation():
    with pytest.raises(ValueError):
        FTable(monomial((1,), ()))


# -- re-indexing -------------------------------------------------------------------

def test_reindex_moves_each_entry_by_its_block():
    poly = SpinPolynomial({((2, 5), (-1, 0)): 1.0, ((4,), (-2,)): 2.0, ((3,), ()): 0.5, ((), (-1, 0)): 9.0})
    f = reindex(FTable(poly, 0.0))
    assert f.coef((0, 3), (-2, -1)) == 1.0       # k = 1
    assert f.coef((0,), (-4,)) == 2.0            # k = 2
    assert f.coef((1,), ()) == 0.5               # k = 1
    assert len(f) == 3


def test_reindex_sums_collisions():
    poly = SpinPolynomial({((2,), (-1,)): 1.0, ((4,), (0,)): 2.0})
    assert reindex(FTable(poly)).coef((0,), (-2,)) == 3.0
    assert len(reindex(FTable(poly))) == 1


def test_canonical_class():
    assert canonical_class((-5, -3)) == (-2, 0)
    assert canonical_class(()) == ()


# -- expectations and D ----------------------------------------------------------------

@pytest.mark.parametrize("name", KERNELS)
@given(c=boundary_polys(), g=polys(sigma=(0, 4), block=(-3, -1), max_terms=3))
@settings(max_examples=20)
def test_expectation_matches_enumeration(name, c, g):
    kernel = get_kernel(name)
    e = expectation(g, c, kernel)
    sup = external_support(c, (g,))
    for cfg in range(sup.size):
        sig, blk = sup.spins(cfg)
        assert abs(evaluate(e, sig, blk) - brute_expectation(g, c, kernel, sig, blk)) < 1e-12


def test_decimation_diagnostic(decimation):
    seed, base = decimation
    for mu in (0.0, 0.5, 1.0, 2.0):
        d = contraction_diagnostic(base, seed.kernel, NormWeights(mu))
        assert math.isclose(d, math.exp(-mu) * max(1.0, math.tanh(80.0)), rel_tol=1e-14)


def test_diagnostic_uses_largest_component(majority):
    seed, base = majority
    comps = contraction_components(base, seed.kernel, NormWeights(1.0))
    assert contraction_diagnostic(base, seed.kernel, NormWeights(1.0)) == max(comps.values())
    # the A = {1} component is the largest at mu = 1
    assert comps[(1,)] == max(comps.values())


def test_interval_diagnostic_encloses_float(majority):
    seed, base = majority
    fl = contraction_diagnostic(base, seed.kernel, NormWeights(1.0))
    iv = contraction_diagnostic(base, seed.kernel, NormWeights(1.0), interval=True)
    assert iv.lo <= fl <= iv.hi and iv.width < 1e-10


def test_block_expectation_rejects_bad_subset(majority):
    seed, base = majority
    with pytest.raises(ValueError):
        block_expectation((0, 2), base, seed.kernel)


@given(c=boundary_polys(scale=0.2), g=polys(sigma=(0, 4), block=(-3, -1), max_terms=3))
@settings(max_examples=30)
def test_expectation_norm_bounded(majority, c, g):
    seed, base = majority
    w = NormWeights(1.0)
    point = base + c
    if contraction_diagnostic(point, seed.kernel, w) < 1:
        assert weighted_norm(expectation(g, point, seed.kernel), w) <= weighted_norm(g, w) * (1 + 1e-12)


# -- rho ---------------------------------------------------------------------------

def test_rho_values():
    assert rho(0.0) == 0.0
    assert math.isclose(rho(math.log(1.5)), 2.0, rel_tol=1e-15)
    assert math.isclose(rho(math.log(4 / 3)), 1.0, rel_tol=1e-15)
    with pytest.raises(ValueError):
        rho(math.log(2.0))
    with pytest.raises(ValueError):
        rho(-0.1)


@given(st.floats(0.0, 50.0))
def test_rho_inverse_roundtrip(y):
    assert math.isclose(rho(rho_inverse(y)), y, rel_tol=1e-12, abs_tol=1e-15)


@given(st.floats(0.0, 0.69))
def test_interval_rho_encloses_float(r):
    iv = rho(Interval(r))
    assert iv.lo <= rho(r) <= iv.hi


# -- the Hamiltonian ---------------------------------------------------------------------

def test_hamiltonian_hat_keys_and_tail():
    poly, tail = hamiltonian_hat(HamiltonianSpec(2.0, 0.1, 2.0, r_max=3), NormWeights(1.0))
    assert poly.coef((0, 1)) == 2.0 and poly.coef((1, 2)) == 2.0
    assert math.isclose(poly.coef((0, 2)), 0.1 / 4) and math.isclose(poly.coef((1, 4)), 0.1 / 9)
    assert poly.coef((0, 4)) == 0.0
    ref = 0.1 * 2 * (math.pi ** 2 / 6 - 1 - 1 / 4 - 1 / 9) * math.e ** 2
    assert math.isclose(tail, ref, rel_tol=1e-9)


def test_hamiltonian_spec_validation():
    with pytest.raises(ValueError):
        HamiltonianSpec(0.0)
    with pytest.raises(ValueError):
        HamiltonianSpec(1.0, -0.1)
    with pytest.raises(ValueError):
        HamiltonianSpec(1.0, 0.1, 1.0)


# -- toy chain ------------------------------------------------------------------------

@pytest.mark.parametrize("name", KERNELS)
@pytest.mark.parametrize("eps", [0.0, 0.05])
def test_toy_chain_partition_preserved(name, eps):
    a, b = toy_chain_partition(get_kernel(name), 0.8, eps, 2.0)
    assert abs(a - b) <= 1e-10 * abs(a)


def test_rg_F_is_reindexed_block_sum(majority):
    seed, base = majority
    assert rg_F(base, seed.kernel) == reindex(block_sum_out(base, seed.kernel))
    assert np.isfinite(weighted_norm(rg_F(base, seed.kernel)))
