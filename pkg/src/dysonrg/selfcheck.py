"""Golden-number regression suite behind ``dysonrg selfcheck``.

Each check returns ``(name, passed, detail)``.  Reference numbers are the
eight-decimal values published for the majority-rule and decimation kernels,
plus closed forms for the torus quantities.
"""
from __future__ import annotations

import math

import numpy as np

from . import certify, lro, rgmap
from .algebra import NormWeights, SpinPolynomial, multiply, weighted_norm
from .interval import Interval

GAMMA = 40.0
SEED_AB = (-0.18019161, -0.02254094)
RESIDUAL_PREFACTOR = 0.00157619
E_F = (0.00078810, -0.00078810)
D0_MU1 = 0.60487407
OBJECTIVE_MU1 = 0.25088335
# D components: (constant, coefficient of e^-mu, coefficient of e^-2mu)
D_COMPONENTS = {
    (0,): (0.07166608, 1.01554146, 0.0),
    (1,): (0.33563322, 0.73187250, 0.0),
    (0, 1): (0.0, 0.33737535, 0.67990824),
}
# <sigma(A)> at the majority seed, keys (U, T)
EXPECTATIONS = {
    (0,): {
        ((), (0,)): 0.77632018, ((), (-1,)): 0.22367982, ((2,), ()): -0.03496197,
        ((2,), (-1, 0)): 0.03496197, ((), (-2,)): -0.00777073, ((), (-2, -1, 0)): 0.00777073,
        ((2,), (-2, 0)): -0.00087107, ((2,), (-2, -1)): 0.00087107,
    },
    (1,): {
        ((), (0,)): 0.69811964, ((2,), ()): 0.30188036, ((), (-1,)): -0.03145297,
        ((2,), (-1, 0)): 0.03145297, ((), (-2,)): 0.00114994, ((2,), (-2, 0)): -0.00114994,
        ((), (-2, -1, 0)): -0.00114994, ((2,), (-2, -1)): 0.00114994,
    },
    (0, 1): {
        ((), ()): 0.47443982, ((2,), (0,)): 0.26691838, ((), (-1, 0)): 0.19222684,
        ((2,), (-1,)): 0.06641495, ((), (-2, 0)): -0.00662078, ((), (-2, -1)): 0.00662078,
        ((2,), (-2,)): -0.00202101, ((2,), (-2, -1, 0)): 0.00202101,
    },
}
DEC8 = 5e-9


def _close(x, ref, tol=DEC8) -> bool:
    return abs(x - ref) <= tol


def _majority_base():
    seed = certify.majority_seed(GAMMA)
    h0, _ = rgmap.hamiltonian_hat(rgmap.HamiltonianSpec(GAMMA))
    return seed, seed.c0 + h0


def check_seed():
    a, b = certify.majority_seed_solve()
    return "majority seed (a0, b0)", _close(a, SEED_AB[0]) and _close(b, SEED_AB[1]), f"a0={a:.8f} b0={b:.8f}"


def check_residual():
    seed, base = _majority_base()
    forms = certify.majority_closed_forms(seed.a, seed.b)
    w = NormWeights(1.0)
    res = weighted_norm(rgmap.rg_F(base, seed.kernel) - seed.c0, w)
    ok = _close(forms["e"], E_F[0]) and _close(forms["f"], E_F[1]) and _close(res / math.e, RESIDUAL_PREFACTOR)
    return "majority residual", ok, f"e={forms['e']:.8f} f={forms['f']:.8f} residual/e^mu={res / math.e:.8f}"


def check_expectations():
    seed, base = _majority_base()
    worst = 0.0
    for a, table in EXPECTATIONS.items():
        e = rgmap.block_expectation(a, base, seed.kernel)
        for key, ref in table.items():
            worst = max(worst, abs(e.coef(*key) - ref))
    return "expectation tables (24 coefficients)", worst <= DEC8, f"max deviation {worst:.2e}"


def check_contraction():
    seed, base = _majority_base()
    worst = 0.0
    for mu in (0.5, 1.0, 2.0):
        comps = rgmap.contraction_components(base, seed.kernel, NormWeights(mu))
        for a, (c0, c1, c2) in D_COMPONENTS.items():
            worst = max(worst, abs(comps[a] - (c0 + c1 * math.exp(-mu) + c2 * math.exp(-2 * mu))))
    d0 = rgmap.contraction_diagnostic(base, seed.kernel, NormWeights(1.0))
    ok = worst <= 2e-8 and _close(d0, D0_MU1, 1e-8)
    return "D(c0) and its components", ok, f"D0={d0:.8f} component deviation {worst:.2e}"


def check_certificate(interval: bool = False):
    seed = certify.majority_seed(GAMMA)
    cert = certify.theorem_certificate(seed, rgmap.HamiltonianSpec(GAMMA), NormWeights(1.0),
                                       "interval" if interval else "float")
    obj = cert.objective
    if interval:
        ok = cert.verdict and OBJECTIVE_MU1 - 1e-6 <= obj.hi and obj.lo <= OBJECTIVE_MU1 + 1e-6 \
            and obj.width < 1e-6 and obj.hi < 1
        return "certificate enclosure (mu=1)", ok, f"[{obj.lo:.10f}, {obj.hi:.10f}]"
    ok = cert.verdict and _close(obj, OBJECTIVE_MU1, 1e-6)
    return "certificate infimum (mu=1)", ok, f"objective={obj:.8f}"


def check_decimation():
    worst_f = worst_h = worst_d = 0.0
    kern = rgmap.get_kernel("decimation")
    for g in (0.5, 1.0, 5.0, 40.0):
        seed = certify.decimation_seed(g)
        h0, _ = rgmap.hamiltonian_hat(rgmap.HamiltonianSpec(g))
        f, ft = rgmap.rg_step(seed.c0 + h0, kern)
        worst_f = max(worst_f, weighted_norm(f - seed.c0))
        ren = rgmap.renormalized_hamiltonian(ft)
        worst_h = max(worst_h, abs(ren.classes.get((-1, 0), 0.0) - 0.5 * math.log(math.cosh(2 * g))))
        d = rgmap.contraction_diagnostic(seed.c0 + h0, kern, NormWeights(1.0))
        worst_d = max(worst_d, abs(d - math.exp(-1.0)))
    ok = worst_f < 1e-12 and worst_h < 1e-12 and worst_d < 1e-12
    return "decimation exactness", ok, f"|F-c0|={worst_f:.1e} |h'-ref|={worst_h:.1e} |D-e^-mu|={worst_d:.1e}"


def check_rho():
    ok = _close(rgmap.rho(math.log(1.5)), 2.0, 1e-14) and _close(rgmap.rho(math.log(4 / 3)), 1.0, 1e-14)
    ok = ok and rgmap.rho(0.0) == 0.0
    for y in (0.1, 0.5, 0.9):
        ok = ok and _close(rgmap.rho(rgmap.rho_inverse(y)), y, 1e-13)
    return "rho anchors", ok, f"rho(ln 1.5)={rgmap.rho(math.log(1.5))!r}"


def check_toy_chain():
    worst = 0.0
    for name in ("decimation", "majority"):
        for eps in (0.0, 0.05):
            a, b = rgmap.toy_chain_partition(rgmap.get_kernel(name), 1.0, eps, 2.0)
            worst = max(worst, abs(a - b))
    return "toy chain partition function", worst < 1e-10, f"max |log Z - log Z'| {worst:.1e}"


def check_torus():
    pc = lro.periodic_coupling(1, 1, 2.0)
    m1, q1 = lro.moment_measure_check(1, 2.0)
    m3, q3 = lro.moment_measure_check(3, 1.5)
    d, q = lro.integral_rep_check(2, 3, 5, 1.5)
    model = lro.TorusModel(3, 0.5, 0.2, 1.5)
    ir = all(r[-1] for r in lro.infrared_check(model))
    gd = abs(lro.log_Z(model, np.full(6, 0.7)) - lro.log_Z(model)) < 1e-12
    ok = (_close(pc, math.pi ** 2 / 4, 1e-12) and _close(q1, m1, 1e-10) and _close(q3, m3, 1e-10)
          and _close(d, q, 1e-8) and ir and gd and lro.dispersion_E(0.0, model) == 0.0)
    return "torus anchors", ok, f"J(1; m=1)={pc:.10f} intrep diff={abs(d - q):.1e}"


def check_properties(n: int = 50, seed: int = 1):
    """Quick randomized checks: Banach-algebra inequality and transform roundtrip."""
    from .algebra import Support, coefficients_from_values, values_on

    rng = np.random.default_rng(seed)
    w = NormWeights(0.7, 0.3)
    ok = True
    for _ in range(n):
        p = _random_poly(rng)
        q = _random_poly(rng)
        ok &= weighted_norm(multiply(p, q, w, eps=0.0), w) <= weighted_norm(p, w) * weighted_norm(q, w) * (1 + 1e-12)
        sup = Support.covering(p)
        back = coefficients_from_values(values_on(p, sup), sup)
        ok &= weighted_norm(back - p) <= 1e-12 * max(1.0, weighted_norm(p))
    return "property spot checks", bool(ok), f"{n} random cases"


def _random_poly(rng) -> SpinPolynomial:
    terms = {}
    for _ in range(rng.integers(1, 6)):
        x = tuple(sorted(set(rng.integers(0, 5, size=rng.integers(0, 3)).tolist())))
        y = tuple(sorted(set(rng.integers(-3, 1, size=rng.integers(0, 3)).tolist())))
        terms[(x, y)] = float(rng.normal())
    return SpinPolynomial(terms)


def check_interval_consistency():
    """Float values of D0, residual and objective lie in their interval enclosures."""
    seed = certify.majority_seed(GAMMA)
    spec = rgmap.HamiltonianSpec(GAMMA)
    fl = certify.theorem_certificate(seed, spec, NormWeights(1.0), "float")
    iv = certify.theorem_certificate(seed, spec, NormWeights(1.0), "interval")
    pairs = [(fl.d0, iv.d0), (fl.residual, iv.residual), (fl.objective, iv.objective)]
    ok = all(isinstance(i, Interval) and i.lo <= f <= i.hi for f, i in pairs)
    return "float inside interval enclosures", ok, ", ".join(f"{f:.10f}" for f, _ in pairs)


CHECKS = (check_seed, check_residual, check_expectations, check_contraction, check_certificate,
          check_decimation, check_rho, check_toy_chain, check_torus, check_properties)


def run_all(interval: bool = False) -> list:
    results = []
    checks = list(CHECKS)
    if interval:
        checks += [lambda: check_certificate(interval=True), check_interval_consistency]
    for fn in checks:
        try:
            results.append(fn())
        except Exception as exc:  # a crash is a failed check, not a crashed suite
            results.append((getattr(fn, "__name__", "check"), False, f"{type(exc).__name__}: {exc}"))
    return results


__all__ = ["CHECKS", "run_all"]
