"""Approximate fixed points and the contraction certificate.

Given a finite seed ``c0`` and the truncated Hamiltonian ``H0``, the fixed
point equation ``F(c + H) = c`` has a solution in a ball around ``c0`` as soon
as

    inf_{r > 0} (||F(c0 + H0) - c0|| + h) / (r [1 - D(c0 + H0) - rho(r + h)]) < 1,

with ``h = ||H - H0||``.  :func:`theorem_certificate` evaluates that quantity,
in floats or with rigorous interval bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .algebra import NormWeights, SpinPolynomial, make_poly, weighted_norm
from .couplings import coupling_tail_sum, coupling_tail_value
from .interval import Interval, iexp, lower, upper
from .rgmap import (
    BlockKernel,
    HamiltonianSpec,
    contraction_components,
    get_kernel,
    hamiltonian_hat,
    rg_F,
    rho,
    rho_inverse,
)

LN15 = math.log(1.5)
GRID_POINTS = 1024


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SeedPoint:
    c0: SpinPolynomial
    kernel: BlockKernel
    gamma: float
    a: float = 0.0
    b: float = 0.0


def decimation_seed(gamma: float) -> SeedPoint:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return SeedPoint(make_poly([((0,), (-1,), gamma)]), get_kernel("decimation"), gamma)


def _majority_rhs(a: float, b: float):
    x = math.log(math.exp(-a + b) + 0.5 * math.exp(a - b))
    y = math.log(1.5 * math.exp(-a + b) + 0.5 * math.exp(a - b))
    z = math.log(math.exp(-a - b) + 0.5 * math.exp(a + b))
    w = math.log(1.5 * math.exp(-a - b) + 0.5 * math.exp(a + b))
    return (-2 * LN15 + x - y + z - w) / 8.0, (-2 * LN15 - x + y - z + w) / 8.0


def majority_closed_forms(a: float, b: float) -> dict:
    """Large-gamma coefficients of sigma_2 s_0, sigma_2 s_-1, sigma_2 s_-2, sigma_2 s_0 s_-1 s_-2 (minus gamma)."""
    x = math.log(math.exp(-a + b) + 0.5 * math.exp(a - b))
    y = math.log(1.5 * math.exp(-a + b) + 0.5 * math.exp(a - b))
    z = math.log(math.exp(-a - b) + 0.5 * math.exp(a + b))
    w = math.log(1.5 * math.exp(-a - b) + 0.5 * math.exp(a + b))
    return {
        "c_minus_gamma": (-2 * LN15 + x - y + z - w) / 8.0,
        "d": (-2 * LN15 - x + y - z + w) / 8.0,
        "e": (x - y - z + w) / 8.0,
        "f": (-x + y + z - w) / 8.0,
    }


def majority_seed_solve(tolerance: float = 1e-14, max_iter: int = 500):
    """Solve the gamma-independent seed equations for ``(a0, b0)``.

    Plain fixed-point iteration first; if that stalls, Newton with a
    finite-difference Jacobian.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    a = b = 0.0
    best = math.inf
    stall = 0
    for _ in range(max_iter):
        na, nb = _majority_rhs(a, b)
        res = max(abs(na - a), abs(nb - b))
        a, b = na, nb
        if res < tolerance:
            return a, b
        stall = stall + 1 if res >= best else 0
        best = min(best, res)
        if stall > 20:
            break
    # Newton fallback on G(a, b) = rhs(a, b) - (a, b)
    for _ in range(100):
        ga, gb = _majority_rhs(a, b)
        ra, rb = ga - a, gb - b
        if max(abs(ra), abs(rb)) < tolerance:
            return a, b
        step = 1e-7
        pa, pb = _majority_rhs(a + step, b)
        qa, qb = _majority_rhs(a, b + step)
        jac = np.array([[(pa - ga) / step - 1.0, (qa - ga) / step],
                        [(pb - gb) / step, (qb - gb) / step - 1.0]])
        da, db = np.linalg.solve(jac, [-ra, -rb])
        a, b = a + da, b + db
    raise ConvergenceError("majority-rule seed equations did not converge")


def majority_seed(gamma: float, a: Optional[float] = None, b: Optional[float] = None) -> SeedPoint:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if a is None or b is None:
        a, b = majority_seed_solve()
    c0 = make_poly([((0,), (-1,), gamma + a), ((0,), (-2,), b)])
    return SeedPoint(c0, get_kernel("majority"), gamma, a, b)


def seed_for(kernel: str, gamma: float) -> SeedPoint:
    return decimation_seed(gamma) if kernel == "decimation" else majority_seed(gamma)


# -- the objective --------------------------------------------------------------

def objective(r: float, residual: float, d0: float, h: float) -> float:
    denom = r * (1.0 - d0 - rho(r + h))
    if denom <= 0:
        return math.inf
    return (residual + h) / denom


def _golden(fn, a: float, b: float, iters: int = 100) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = b - g * (b - a), a + g * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - g * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + g * (b - a)
            f2 = fn(x2)
        if b - a < 1e-15 * max(1.0, abs(b)):
            break
    return x1 if f1 <= f2 else x2


def minimize_objective(residual: float, d0: float, h: float):
    """Return ``(r_star, value, r_max)``; ``r_max <= 0`` means no admissible radius."""
    y = 1.0 - d0
    if y <= 0:
        return math.nan, math.inf, -math.inf
    r_max = rho_inverse(y) - h
    if r_max <= 0:
        return math.nan, math.inf, r_max
    fn = lambda r: objective(r, residual, d0, h)  # noqa: E731
    grid = r_max * (np.arange(1, GRID_POINTS + 1) / (GRID_POINTS + 1))
    vals = np.array([fn(r) for r in grid])
    i = int(np.argmin(vals))
    lo = grid[i - 1] if i > 0 else 0.5 * grid[0]
    hi = grid[i + 1] if i + 1 < len(grid) else 0.5 * (grid[-1] + r_max)
    r_star = _golden(fn, lo, hi)
    best = fn(r_star)
    if vals[i] < best:
        r_star, best = float(grid[i]), float(vals[i])
    return float(r_star), float(best), float(r_max)


def _rho_bound(t: np.ndarray, upward: bool) -> np.ndarray:
    """Outward-rounded bound of ``rho`` at each point of ``t`` (requires ``0 <= t < ln 2``)."""
    e = iexp(Interval(t, t))
    val = (e - 1.0) * 2.0 / (Interval(2.0) - e)
    return np.asarray(val.hi if upward else val.lo, dtype=float)


def _phi_bounds(a: np.ndarray, b: np.ndarray, y: float, h: float):
    """Per cell ``[a, b]``: an upper bound of ``r (y - rho(r + h))`` and a lower bound at the midpoint."""
    ln2 = math.log(2.0)
    # rho is increasing, so on the cell it is at least rho(a + h)
    ta = Interval(a, a) + h
    ok = np.asarray(ta.hi) < ln2
    t_lo = np.where(ok, np.maximum(np.asarray(ta.lo), 0.0), 0.0)
    gap = Interval(y) - Interval(_rho_bound(t_lo, upward=False))
    gap_hi = np.asarray(gap.hi)
    upper_b = np.asarray((Interval(b, b) * Interval(np.maximum(gap_hi, 0.0))).hi)
    upper_b = np.where(ok & (gap_hi > 0), upper_b, 0.0)
    m = 0.5 * (a + b)
    tm = Interval(m, m) + h
    okm = np.asarray(tm.hi) < ln2
    t_hi = np.where(okm, np.maximum(np.asarray(tm.hi), 0.0), 0.0)
    gap_m = Interval(y) - Interval(_rho_bound(t_hi, upward=True))
    lower_m = np.asarray((Interval(m, m) * Interval(np.asarray(gap_m.lo))).lo)
    lower_m = np.where(okm, lower_m, -np.inf)
    return upper_b, lower_m


def sup_phi_upper(y: float, h: float, rel_tol: float = 1e-10, max_rounds: int = 200,
                  max_cells: int = 1 << 16) -> float:
    """Certified upper bound on ``sup_r r (y - rho(r + h))`` by branch and bound."""
    t_max = rho_inverse(y) - h
    # pad past the float root so the bracket surely covers it
    t_max = t_max * (1 + 1e-9) + 1e-15
    if t_max <= 0:
        return 0.0
    edges = np.linspace(0.0, t_max, 1025)
    a, b = edges[:-1], edges[1:]
    best_lower = -np.inf
    top = np.inf
    for _ in range(max_rounds):
        up, low = _phi_bounds(a, b, y, h)
        best_lower = max(best_lower, float(low.max()))
        top = float(up.max())
        live = up >= best_lower
        if top - best_lower <= rel_tol * abs(best_lower) or 2 * int(live.sum()) > max_cells:
            return top
        a, b = a[live], b[live]
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
    return top


# -- certificate ----------------------------------------------------------------

@dataclass
class Certificate:
    kernel: str
    gamma: float
    eps: float
    alpha: float
    mu: float
    nu: float
    mode: str
    d0: object
    residual: object
    h: object
    h_unweighted: object
    r_star: float
    r_max: float
    objective: object
    verdict: bool
    reason: str = ""
    components: dict = field(default_factory=dict)
    seed: dict = field(default_factory=dict)

    @property
    def contraction_bound(self) -> float:
        """``D0 + rho(r* + h)``: bound on the derivative in the certified ball."""
        if not self.verdict:
            return math.nan
        return upper(self.d0) + rho(min(self.r_star + upper(self.h), math.log(2) - 1e-12))

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, Interval):
                return {"lo": float(v.lo), "hi": float(v.hi), "mid": float(v.mid)}
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v

        return {
            "kernel": self.kernel,
            "gamma": self.gamma,
            "eps": self.eps,
            "alpha": self.alpha,
            "mu": self.mu,
            "nu": self.nu,
            "mode": self.mode,
            "D0": enc(self.d0),
            "D_components": {"".join(map(str, k)): enc(v) for k, v in self.components.items()},
            "residual": enc(self.residual),
            "h_weighted": enc(self.h),
            "h_unweighted": enc(self.h_unweighted),
            "r_star": enc(self.r_star),
            "r_max": enc(self.r_max),
            "objective": enc(self.objective),
            "contraction_bound": enc(self.contraction_bound),
            "verdict": "pass" if self.verdict else "fail",
            "reason": self.reason,
            "seed": self.seed,
            "note": "h_weighted includes exp(2 mu) for the |X|=2 couplings; h_unweighted omits it. "
                    "The verdict uses h_weighted.",
        }


@dataclass(frozen=True)
class SeedEvaluation:
    """Parameter-free part of a certificate: D0 and the residual at the seed."""

    d0: object
    residual: object
    components: dict


def evaluate_seed(seed: SeedPoint, w: NormWeights, interval: bool = False) -> SeedEvaluation:
    h0, _ = hamiltonian_hat(HamiltonianSpec(seed.gamma), w, interval=interval)
    c0 = seed.c0.to_interval() if interval else seed.c0
    base = c0 + h0
    comps = contraction_components(base, seed.kernel, w, interval=interval)
    if interval:
        d0 = Interval(max(v.lo for v in comps.values()), max(v.hi for v in comps.values()))
    else:
        d0 = max(comps.values())
    res = weighted_norm(rg_F(base, seed.kernel, interval=interval) - c0, w)
    return SeedEvaluation(d0, res, comps)


def h_values(eps: float, alpha: float, w: NormWeights, interval: bool = False):
    """``||H - H0||`` with and without the ``exp(2 mu)`` weight (H0 = nearest-neighbour part)."""
    if eps == 0:
        z = Interval(0.0) if interval else 0.0
        return z, z
    if interval:
        c = coupling_tail_sum(alpha, 2)
        unweighted = Interval(eps) * c
        return unweighted * w.ifactor(2, 0), unweighted
    c = coupling_tail_value(alpha, 2)
    return eps * c * math.exp(2 * w.mu), eps * c


def certificate_from(ev: SeedEvaluation, seed: SeedPoint, spec: HamiltonianSpec, w: NormWeights,
                     interval: bool = False) -> Certificate:
    h, h_unw = h_values(spec.eps, spec.alpha, w, interval)
    common = dict(kernel=seed.kernel.name, gamma=seed.gamma, eps=spec.eps, alpha=spec.alpha, mu=w.mu,
                  nu=w.nu, mode="interval" if interval else "float", d0=ev.d0, residual=ev.residual, h=h,
                  h_unweighted=h_unw, components=ev.components,
                  seed={"a": seed.a, "b": seed.b, "terms": len(seed.c0)})
    if not upper(ev.d0) < 1.0:
        return Certificate(r_star=math.nan, r_max=-math.inf, objective=math.inf, verdict=False,
                           reason="D(c0 + H0) >= 1", **common)
    # float minimization on the worst-case parameters
    r_star, val, r_max = minimize_objective(upper(ev.residual), upper(ev.d0), upper(h))
    if not r_max > 0:
        return Certificate(r_star=math.nan, r_max=r_max, objective=math.inf, verdict=False,
                           reason=f"r_max = {r_max:.3e} <= 0: h too large for 1 - D0", **common)
    if not interval:
        ok = val < 1.0
        return Certificate(r_star=r_star, r_max=r_max, objective=val, verdict=ok,
                           reason="" if ok else "objective >= 1", **common)
    # rigorous upper bound: the objective at r_star with interval parameters
    num = ev.residual + h
    den = Interval(r_star) * (Interval(1.0) - ev.d0 - rho(Interval(r_star) + h))
    if not den.lo > 0:
        return Certificate(r_star=r_star, r_max=r_max, objective=math.inf, verdict=False,
                           reason="denominator not certified positive at r*", **common)
    ub = (num / den).hi
    # rigorous lower bound on the infimum: smallest numerator over largest sup of r(y - rho(r + h))
    phi = sup_phi_upper(1.0 - lower(ev.d0), lower(h))
    lb = 0.0 if phi <= 0 or lower(num) <= 0 else (Interval(lower(num)) / Interval(phi)).lo
    obj = Interval(min(lb, ub), ub)
    ok = ub < 1.0
    return Certificate(r_star=r_star, r_max=r_max, objective=obj, verdict=ok,
                       reason="" if ok else "objective upper bound >= 1", **common)


def theorem_certificate(seed: SeedPoint, spec: HamiltonianSpec, w: NormWeights = NormWeights(1.0),
                        mode: str = "float") -> Certificate:
    """Check the contraction hypothesis at the given seed and Hamiltonian."""
    if mode not in ("float", "interval"):
        raise ValueError(f"mode must be float or interval, got {mode!r}")
    interval = mode == "interval"
    ev = evaluate_seed(seed, w, interval)
    return certificate_from(ev, seed, spec, w, interval)


@dataclass
class Threshold:
    eps: float
    certificate: Optional[Certificate]
    bracket: tuple
    note: str = ("threshold depends on the chosen mu, nu, gamma and alpha; it is a property of this "
                 "certificate, not a sharp constant")


def epsilon_threshold(kernel: str, alpha: float, gamma: float, w: NormWeights = NormWeights(1.0),
                      mode: str = "float", rel_width: float = 1e-6) -> Threshold:
    """Largest eps (to ``rel_width``) for which the certificate passes."""
    interval = mode == "interval"
    seed = seed_for(kernel, gamma)
    ev = evaluate_seed(seed, w, interval)

    def passes(eps: float) -> bool:
        spec = HamiltonianSpec(gamma, eps, alpha)
        return certificate_from(ev, seed, spec, w, interval).verdict

    if not passes(0.0):
        return Threshold(0.0, None, (0.0, 0.0))
    y = 1.0 - upper(ev.d0)
    per_eps = coupling_tail_value(alpha, 2) * math.exp(2 * w.mu)
    hi = rho_inverse(y) / per_eps * (1 + 1e-9)
    lo = 0.0
    while (hi - lo) > rel_width * max(hi, 1e-300):
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    cert = certificate_from(ev, seed, HamiltonianSpec(gamma, lo, alpha), w, interval)
    return Threshold(lo, cert, (lo, hi))


__all__ = [
    "Certificate",
    "ConvergenceError",
    "SeedPoint",
    "Threshold",
    "coupling_tail_sum",
    "decimation_seed",
    "epsilon_threshold",
    "evaluate_seed",
    "majority_seed",
    "majority_seed_solve",
    "minimize_objective",
    "theorem_certificate",
]
