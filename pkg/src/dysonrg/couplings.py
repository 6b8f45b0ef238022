"""Power-law coupling sums with rigorous tail enclosures."""
from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import special

from .interval import Interval, ipow_pos, isum

PARTIAL_TERMS = 10**6


def power_law(d: int, alpha: float) -> float:
    """Default long-range coupling: ``|d|**-alpha`` for ``|d| >= 2``, else 0."""
    d = abs(int(d))
    return float(d) ** -alpha if d >= 2 else 0.0


def _integral_tail(start: Interval, alpha: float, scale: float = 1.0) -> Interval:
    """``int_start^inf (scale*x)**-alpha dx`` style bound, ``start`` in units of x."""
    return ipow_pos(start, 1.0 - alpha) / Interval(alpha - 1.0) / Interval(scale)


@lru_cache(maxsize=64)
def coupling_tail_sum(alpha: float, r_start: int = 2, terms: int = PARTIAL_TERMS) -> Interval:
    """Enclosure of ``2 * sum_{j >= r_start} j**-alpha``.

    Explicit sum of ``terms`` powers plus the integral-comparison bracket for
    the remainder.  ``r_start=2`` gives the constant often written ``c(alpha)``.
    """
    if alpha <= 1:
        raise ValueError(f"sum diverges for alpha={alpha} <= 1")
    if r_start < 1:
        raise ValueError("r_start must be >= 1")
    js = np.arange(r_start, r_start + terms, dtype=float)
    partial = isum(ipow_pos(Interval(js, js), -alpha))
    n_next = float(r_start + terms)
    # sum_{j >= n} j^-a lies between int_n^inf and int_{n-1}^inf of x^-a
    lo = _integral_tail(Interval(n_next), alpha).lo
    hi = _integral_tail(Interval(n_next - 1.0), alpha).hi
    total = partial + Interval(lo, hi)
    return total * 2.0


def coupling_tail_value(alpha: float, r_start: int = 2) -> float:
    """Float value of ``2 * sum_{j >= r_start} j**-alpha`` via the Hurwitz zeta function."""
    if alpha <= 1:
        raise ValueError(f"sum diverges for alpha={alpha} <= 1")
    return 2.0 * float(special.zeta(alpha, r_start))


def _reduce(d: int, m: int) -> int:
    r = int(d) % (2 * m)
    if r == 0:
        raise ValueError(f"distance {d} is a multiple of the period {2 * m}")
    return r


def periodic_coupling(d: int, m: int, alpha: float) -> float:
    """``sum_n |d + 2 m n|**-alpha`` (all images on the ring of 2m sites)."""
    if alpha <= 1:
        raise ValueError(f"sum diverges for alpha={alpha} <= 1")
    r = _reduce(d, m)
    period = 2.0 * m
    q = r / period
    return float(period ** -alpha * (special.zeta(alpha, q) + special.zeta(alpha, 1.0 - q)))


def periodic_couplings(m: int, alpha: float) -> np.ndarray:
    """Vector ``J[n] = periodic_coupling(n, m, alpha)`` for ``n = 1 .. 2m-1``; index 0 is 0."""
    period = 2.0 * m
    r = np.arange(1, 2 * m, dtype=float)
    q = r / period
    out = np.zeros(2 * m)
    out[1:] = period ** -alpha * (special.zeta(alpha, q) + special.zeta(alpha, 1.0 - q))
    return out


def periodic_coupling_enclosure(d: int, m: int, alpha: float, terms: int = 10**5) -> Interval:
    """Direct image sum with integral-bounded tails, independent of the zeta route."""
    if alpha <= 1:
        raise ValueError(f"sum diverges for alpha={alpha} <= 1")
    r = float(_reduce(d, m))
    period = 2.0 * m
    n = np.arange(terms, dtype=float)
    up = r + period * n                # images d + 2mn, n >= 0
    down = period * (n + 1.0) - r      # images |d - 2m(n+1)|, n >= 0
    vals = np.concatenate([up, down])
    partial = isum(ipow_pos(Interval(vals, vals), -alpha))
    tail = Interval(0.0)
    for first in (r + period * terms, period * (terms + 1) - r):
        # sum_{k>=0} (first + period*k)^-a in [int_0^inf, first^-a + int_0^inf]
        integral = ipow_pos(Interval(first), 1.0 - alpha) / Interval(alpha - 1.0) / Interval(period)
        tail = tail + Interval(integral.lo, (integral + ipow_pos(Interval(first), -alpha)).hi)
    return partial + tail


def zeta_minus_one_times_two(alpha: float) -> float:
    """``2 (zeta(alpha) - 1)``, the full tail from distance 2."""
    return 2.0 * (float(special.zeta(alpha)) - 1.0)


def integral_tail_bounds(n: int, alpha: float) -> tuple:
    """``(int_{n+1}^inf x^-a dx, int_n^inf x^-a dx)`` as floats."""
    return ((n + 1.0) ** (1 - alpha) / (alpha - 1), float(n) ** (1 - alpha) / (alpha - 1))


__all__ = [
    "coupling_tail_sum",
    "coupling_tail_value",
    "integral_tail_bounds",
    "periodic_coupling",
    "periodic_coupling_enclosure",
    "periodic_couplings",
    "power_law",
    "zeta_minus_one_times_two",
]
