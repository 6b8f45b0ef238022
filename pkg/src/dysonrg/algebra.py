"""Multilinear functions of Ising spins on the original and block lattices.

A :class:`SpinPolynomial` is the coefficient table ``g(X, Y)`` of

    g(sigma, s) = sum_{X, Y} g(X, Y) sigma(X) s(Y),

where ``X`` is a finite set of original sites, ``Y`` a finite set of block
sites and ``sigma(X)`` is the product of the spins in ``X``.  Keys are pairs of
sorted integer tuples.  Coefficients are floats or :class:`Interval`.

Dense work (evaluation on all configurations and the inverse transform) goes
through a :class:`Support`: the sigma sites occupy the low bits of a mask, the
block sites the high bits.  Configuration index bit ``i`` set means spin ``-1``
at the site of bit ``i``.
"""
from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import kernels
from .interval import Interval, iexp, isum

S_MAX = 24
PRUNE_EPS = 1e-14

Site = int
Key = tuple  # (tuple[int, ...], tuple[int, ...])
Scalar = Union[float, Interval]


class SupportTooLarge(ValueError):
    """Instance has more distinct sites than the dense transforms allow."""


class WindowError(ValueError):
    """A key falls outside the allowed site window."""


@dataclass(frozen=True)
class NormWeights:
    mu: float = 0.0
    nu: float = 0.0

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0:
            raise ValueError(f"norm weights must be nonnegative, got mu={self.mu}, nu={self.nu}")

    def factor(self, nx: int, ny: int) -> float:
        return math.exp(self.mu * nx + self.nu * ny)

    def ifactor(self, nx: int, ny: int) -> Interval:
        return iexp(Interval(self.mu) * nx + Interval(self.nu) * ny)


def site_set(sites: Iterable[int]) -> tuple:
    """Canonical sorted tuple; duplicates are an error."""
    out = tuple(sorted(int(i) for i in sites))
    if len(set(out)) != len(out):
        raise ValueError(f"duplicate sites in {out}")
    return out


def symdiff(a: tuple, b: tuple) -> tuple:
    return tuple(sorted(set(a) ^ set(b)))


def _is_zero(v) -> bool:
    if isinstance(v, Interval):
        return v.lo == 0.0 and v.hi == 0.0
    return v == 0.0


def _in_window(sites: tuple, window) -> bool:
    return window is None or all(window[0] <= i <= window[1] for i in sites)


class SpinPolynomial:
    """Immutable coefficient table ``{(X, Y): coefficient}``.

    ``window_sigma`` / ``window_s`` are optional inclusive site ranges that every
    key must respect.  ``prune_loss`` accumulates the weighted norm of all
    coefficients dropped by pruning on the way to this value.
    """

    __slots__ = ("_terms", "window_sigma", "window_s", "s_max", "prune_loss")

    def __init__(self, terms: Mapping | None = None, window_sigma=None, window_s=None,
                 s_max: int = S_MAX, prune_loss: float = 0.0):
        clean = {}
        for (x, y), v in (terms or {}).items():
            x, y = site_set(x), site_set(y)
            if not _in_window(x, window_sigma) or not _in_window(y, window_s):
                raise WindowError(f"key {(x, y)} outside windows {window_sigma}, {window_s}")
            if not isinstance(v, Interval):
                v = float(v)
            if not _is_zero(v):
                clean[(x, y)] = v
        self._terms = clean
        self.window_sigma = window_sigma
        self.window_s = window_s
        self.s_max = s_max
        self.prune_loss = float(prune_loss)
        n = self.support_size
        if n > s_max:
            raise SupportTooLarge(f"support of {n} sites exceeds cap {s_max}")

    # -- basic access -----------------------------------------------------
    @property
    def terms(self) -> Mapping:
        return MappingProxyType(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self):
        return iter(sorted(self._terms))

    def items(self):
        return [(k, self._terms[k]) for k in sorted(self._terms)]

    def coef(self, x: Iterable[int] = (), y: Iterable[int] = ()) -> Scalar:
        return self._terms.get((site_set(x), site_set(y)), 0.0)

    def __getitem__(self, key) -> Scalar:
        x, y = key
        return self.coef(x, y)

    @property
    def sigma_sites(self) -> tuple:
        return tuple(sorted({i for x, _ in self._terms for i in x}))

    @property
    def block_sites(self) -> tuple:
        return tuple(sorted({j for _, y in self._terms for j in y}))

    @property
    def support_size(self) -> int:
        return len(self.sigma_sites) + len(self.block_sites)

    @property
    def is_interval(self) -> bool:
        return any(isinstance(v, Interval) for v in self._terms.values())

    def _like(self, terms, prune_loss=None) -> "SpinPolynomial":
        return SpinPolynomial(terms, self.window_sigma, self.window_s, self.s_max,
                              self.prune_loss if prune_loss is None else prune_loss)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, SpinPolynomial):
            return NotImplemented
        out = dict(self._terms)
        for k, v in other._terms.items():
            out[k] = out[k] + v if k in out else v
        return self._like(out, self.prune_loss + other.prune_loss)

    def __neg__(self):
        return self._like({k: -v for k, v in self._terms.items()})

    def __sub__(self, other):
        if not isinstance(other, SpinPolynomial):
            return NotImplemented
        return self + (-other)

    def scale(self, a) -> "SpinPolynomial":
        return self._like({k: v * a for k, v in self._terms.items()}, self.prune_loss * abs(float(
            a.mag if isinstance(a, Interval) else a)))

    def __mul__(self, other):
        if isinstance(other, SpinPolynomial):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpinPolynomial):
            return NotImplemented
        return self._terms == other._terms

    __hash__ = None

    def __repr__(self) -> str:
        body = ", ".join(f"{x}|{y}: {v!r}" for (x, y), v in self.items()[:6])
        more = "" if len(self) <= 6 else f", ... ({len(self)} terms)"
        return f"SpinPolynomial({{{body}{more}}})"

    def to_float(self) -> "SpinPolynomial":
        """Midpoints of interval coefficients."""
        return self._like({k: (v.mid if isinstance(v, Interval) else v) for k, v in self._terms.items()})

    def to_interval(self) -> "SpinPolynomial":
        return self._like({k: Interval.coerce(v) for k, v in self._terms.items()})


def make_poly(term_list: Iterable[tuple], window_sigma=None, window_s=None,
              s_max: int = S_MAX) -> SpinPolynomial:
    """Build a polynomial from ``(X, Y, coefficient)`` triples, summing repeats."""
    acc = defaultdict(list)
    for x, y, v in term_list:
        acc[(site_set(x), site_set(y))].append(v)
    terms = {k: _sum(vs) for k, vs in acc.items()}
    return SpinPolynomial(terms, window_sigma, window_s, s_max)


def constant(value: Scalar = 1.0) -> SpinPolynomial:
    return SpinPolynomial({((), ()): value})


def monomial(x: Iterable[int] = (), y: Iterable[int] = (), value: Scalar = 1.0) -> SpinPolynomial:
    return SpinPolynomial({(site_set(x), site_set(y)): value})


def _sum(values: Sequence[Scalar]) -> Scalar:
    """Order-fixed, correctly rounded sum (intervals rounded outward)."""
    if any(isinstance(v, Interval) for v in values):
        ivs = [Interval.coerce(v) for v in values]
        return isum(Interval(np.array([v.lo for v in ivs]), np.array([v.hi for v in ivs])))
    return math.fsum(values)


def _weight(w: NormWeights, x: tuple, y: tuple, interval: bool):
    return w.ifactor(len(x), len(y)) if interval else w.factor(len(x), len(y))


def prune(p: SpinPolynomial, weights: NormWeights = NormWeights(), eps: float = PRUNE_EPS) -> SpinPolynomial:
    """Drop terms with weighted magnitude below ``eps``; the dropped norm goes to ``prune_loss``."""
    if eps <= 0:
        return p
    keep, lost = {}, []
    for (x, y), v in p.items():
        mag = v.mag if isinstance(v, Interval) else abs(v)
        wm = mag * weights.factor(len(x), len(y))
        if wm < eps:
            lost.append(wm)
        else:
            keep[(x, y)] = v
    if not lost:
        return p
    return p._like(keep, p.prune_loss + math.fsum(lost))


def multiply(p: SpinPolynomial, q: SpinPolynomial, weights: NormWeights = NormWeights(),
             eps: float = PRUNE_EPS) -> SpinPolynomial:
    """Product of two multilinear functions (sigma_i**2 = s_j**2 = 1)."""
    sup = Support.covering(p, q, s_max=max(p.s_max, q.s_max))
    pm = [(sup.mask(x, y), v) for (x, y), v in p.items()]
    qm = [(sup.mask(x, y), v) for (x, y), v in q.items()]
    acc = defaultdict(list)
    for m1, v1 in pm:
        for m2, v2 in qm:
            acc[m1 ^ m2].append(v1 * v2)
    terms = {sup.key(m): _sum(vs) for m, vs in acc.items()}
    out = SpinPolynomial(terms, p.window_sigma, p.window_s, max(p.s_max, q.s_max),
                         prune_loss=p.prune_loss + q.prune_loss)
    return prune(out, weights, eps)


def weighted_norm(p: SpinPolynomial, w: NormWeights = NormWeights()) -> Scalar:
    """``sum |p(X,Y)| exp(mu |X| + nu |Y|)``."""
    if p.is_interval:
        parts = [abs(Interval.coerce(v)) * w.ifactor(len(x), len(y)) for (x, y), v in p.items()]
        if not parts:
            return Interval(0.0)
        return _sum(parts)
    return math.fsum(abs(v) * w.factor(len(x), len(y)) for (x, y), v in p.items())


def evaluate(p: SpinPolynomial, sigma: Mapping[int, int], s: Mapping[int, int]) -> Scalar:
    """Value of ``p`` at one configuration, term by term."""
    vals = []
    for (x, y), v in p.items():
        sign = 1
        try:
            for i in x:
                sign *= sigma[i]
            for j in y:
                sign *= s[j]
        except KeyError as exc:
            raise KeyError(f"site {exc.args[0]} missing from assignment") from None
        vals.append(v if sign > 0 else -v)
    return _sum(vals) if vals else 0.0


def shift(p: SpinPolynomial, d_sigma: int, d_s: int) -> SpinPolynomial:
    """Translate every key by ``(d_sigma, d_s)``."""
    terms = {(tuple(i + d_sigma for i in x), tuple(j + d_s for j in y)): v for (x, y), v in p.items()}
    return p._like(terms)


# -- dense transforms -------------------------------------------------------

@dataclass(frozen=True)
class Support:
    """Ordered set of sites backing a dense ``2**n`` array."""

    sigma: tuple = ()
    block: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(self.sigma))
        object.__setattr__(self, "block", tuple(self.block))
        if len(set(self.sigma)) != len(self.sigma) or len(set(self.block)) != len(self.block):
            raise ValueError("duplicate site in support")
        object.__setattr__(self, "_sbit", {i: b for b, i in enumerate(self.sigma)})
        object.__setattr__(self, "_bbit", {j: b + len(self.sigma) for b, j in enumerate(self.block)})

    @classmethod
    def covering(cls, *polys: SpinPolynomial, sigma=(), block=(), s_max: int = S_MAX) -> "Support":
        sig, blk = set(sigma), set(block)
        for p in polys:
            sig.update(p.sigma_sites)
            blk.update(p.block_sites)
        if len(sig) + len(blk) > s_max:
            raise SupportTooLarge(f"combined support {len(sig) + len(blk)} exceeds cap {s_max}")
        return cls(tuple(sorted(sig)), tuple(sorted(blk)))

    @property
    def n(self) -> int:
        return len(self.sigma) + len(self.block)

    @property
    def size(self) -> int:
        return 1 << self.n

    def sigma_bit(self, i: int) -> int:
        return self._sbit[i]

    def block_bit(self, j: int) -> int:
        return self._bbit[j]

    def mask(self, x: tuple, y: tuple) -> int:
        m = 0
        for i in x:
            m |= 1 << self._sbit[i]
        for j in y:
            m |= 1 << self._bbit[j]
        return m

    def key(self, mask: int) -> Key:
        ns = len(self.sigma)
        x = tuple(self.sigma[b] for b in range(ns) if mask >> b & 1)
        y = tuple(self.block[b - ns] for b in range(ns, self.n) if mask >> b & 1)
        return (x, y)

    def spins(self, config: int) -> tuple:
        """(sigma assignment, s assignment) for a configuration index."""
        ns = len(self.sigma)
        sig = {i: (-1 if config >> b & 1 else 1) for b, i in enumerate(self.sigma)}
        blk = {j: (-1 if config >> (b + ns) & 1 else 1) for b, j in enumerate(self.block)}
        return sig, blk

    def spin_array(self, bit: int) -> np.ndarray:
        """+-1 value of the spin at ``bit`` across all configurations."""
        idx = np.arange(self.size)
        return 1.0 - 2.0 * ((idx >> bit) & 1)


def to_dense(p: SpinPolynomial, sup: Support):
    """Coefficient array indexed by mask (Interval of arrays in interval mode)."""
    if p.is_interval:
        lo = np.zeros(sup.size)
        hi = np.zeros(sup.size)
        for (x, y), v in p.items():
            v = Interval.coerce(v)
            m = sup.mask(x, y)
            lo[m], hi[m] = v.lo, v.hi
        return Interval(lo, hi)
    a = np.zeros(sup.size)
    for (x, y), v in p.items():
        a[sup.mask(x, y)] = v
    return a


def values_on(p: SpinPolynomial, sup: Support, interval: bool | None = None):
    """Values of ``p`` on every configuration of ``sup``."""
    dense = to_dense(p.to_interval() if interval and not p.is_interval else p, sup)
    if isinstance(dense, Interval):
        lo, hi = kernels.wht_interval(dense.lo, dense.hi)
        return Interval(lo, hi)
    return kernels.wht(dense)


def dense_to_poly(coeffs, sup: Support, window_sigma=None, window_s=None,
                  s_max: int = S_MAX, drop_exact_zero: bool = True) -> SpinPolynomial:
    if isinstance(coeffs, Interval):
        lo, hi = np.asarray(coeffs.lo), np.asarray(coeffs.hi)
        nz = np.nonzero((lo != 0) | (hi != 0))[0]
        terms = {sup.key(int(m)): Interval(float(lo[m]), float(hi[m])) for m in nz}
    else:
        nz = np.nonzero(coeffs)[0]
        terms = {sup.key(int(m)): float(coeffs[m]) for m in nz}
    return SpinPolynomial(terms, window_sigma, window_s, s_max)


def coefficients_from_values(values, support: Support | tuple, s_max: int = S_MAX) -> SpinPolynomial:
    """Inverse transform: ``g(X,Y) = (1/N) sum_config sigma(X) s(Y) g(config)``."""
    sup = support if isinstance(support, Support) else Support(*support)
    if sup.n > s_max:
        raise SupportTooLarge(f"support of {sup.n} sites exceeds cap {s_max}")
    if isinstance(values, Interval):
        if np.shape(values.lo) != (sup.size,):
            raise ValueError(f"expected {sup.size} values, got {np.shape(values.lo)}")
        lo, hi = kernels.wht_interval(values.lo, values.hi)
        # division by a power of two is exact
        return dense_to_poly(Interval(lo / sup.size, hi / sup.size), sup, s_max=s_max)
    values = np.asarray(values, dtype=float)
    if values.shape != (sup.size,):
        raise ValueError(f"expected {sup.size} values, got {values.shape}")
    return dense_to_poly(kernels.wht(values) / sup.size, sup, s_max=s_max)


# -- text serialization -----------------------------------------------------

def _fmt_sites(sites: tuple) -> str:
    return "{" + ",".join(str(i) for i in sites) + "}"


def _fmt_coef(v: Scalar) -> str:
    if isinstance(v, Interval):
        return f"[{float(v.lo)!r},{float(v.hi)!r}]"
    return repr(float(v))


def dumps(p: SpinPolynomial, const: Scalar | None = None) -> str:
    lines = []
    if const is not None:
        lines.append(f"const={_fmt_coef(const)}")
    for (x, y), v in p.items():
        lines.append(f"X={_fmt_sites(x)} Y={_fmt_sites(y)} coef={_fmt_coef(v)}")
    return "\n".join(lines) + ("\n" if lines else "")


_LINE = re.compile(r"^X=\{([^}]*)\}\s+Y=\{([^}]*)\}\s+coef=(\S+)$")


def _parse_sites(text: str) -> tuple:
    text = text.strip()
    return tuple(int(t) for t in text.split(",")) if text else ()


def _parse_coef(text: str) -> Scalar:
    if text.startswith("["):
        lo, hi = text.strip("[]").split(",")
        return Interval(float(lo), float(hi))
    return float(text)


def loads(text: str):
    """Parse the line format written by :func:`dumps`; returns ``(poly, const)``."""
    terms, const = {}, None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("const="):
            const = _parse_coef(line[len("const="):])
            continue
        m = _LINE.match(line)
        if m is None:
            raise ValueError(f"cannot parse polynomial line: {raw!r}")
        key = (_parse_sites(m.group(1)), _parse_sites(m.group(2)))
        if key in terms:
            raise ValueError(f"duplicate key {key}")
        terms[key] = _parse_coef(m.group(3))
    return SpinPolynomial(terms), const
