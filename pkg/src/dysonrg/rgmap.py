"""Single-block renormalization machinery.

The block of original spins ``(sigma_0, sigma_1)`` carries block spin ``s_0``.
Summing it out against the kernel ``k(sigma_0, sigma_1; s_0)`` turns a
boundary function ``c`` (keys ``X`` touching {0, 1}, ``Y < 0``) into the table
``f(V, W)`` with ``V >= 2``, ``W <= 0``.  Re-indexing ``f`` by one block gives the
map ``F`` whose fixed point describes the summed-out half line; the ``V = {}``
entries of ``f`` are the couplings of the renormalized Hamiltonian.

Every block sum is done in the log domain with the largest exponent factored
out, so ``gamma = 40`` is no harder than ``gamma = 1``.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .algebra import (
    S_MAX,
    NormWeights,
    SpinPolynomial,
    Support,
    _sum,
    coefficients_from_values,
    monomial,
    values_on,
    weighted_norm,
)
from .couplings import coupling_tail_sum, power_law
from .interval import Interval, iexp, ilog

LN2 = math.log(2.0)


class KernelError(ValueError):
    """Kernel table is not a valid normalized RG kernel."""


class BlockSumError(ArithmeticError):
    """The block partition sum vanished on some configuration."""


# -- kernels ----------------------------------------------------------------

def _kidx(s0: int, s1: int, b: int) -> int:
    return (s0 < 0) + 2 * (s1 < 0) + 4 * (b < 0)


@dataclass(frozen=True)
class BlockKernel:
    """Table ``k(sigma_0, sigma_1; s_0)``; entry order follows the config bit convention."""

    table: tuple
    name: str = "custom"

    def __post_init__(self):
        if len(self.table) != 8:
            raise KernelError("kernel table needs 8 entries")
        t = tuple(float(v) for v in self.table)
        object.__setattr__(self, "table", t)
        if min(t) < 0:
            raise KernelError("kernel entries must be nonnegative")
        for i in range(4):
            if abs(t[i] + t[i + 4] - 1.0) > 1e-15:
                raise KernelError(f"kernel not normalized for block configuration {i}")
        for b in (0, 4):
            if not any(t[b:b + 4]):
                raise KernelError("some block spin value has zero weight for every block")

    def __call__(self, s0: int, s1: int, b: int) -> float:
        return self.table[_kidx(s0, s1, b)]

    @classmethod
    def from_function(cls, fn: Callable[[int, int, int], float], name: str = "custom") -> "BlockKernel":
        t = [0.0] * 8
        for s0 in (1, -1):
            for s1 in (1, -1):
                for b in (1, -1):
                    t[_kidx(s0, s1, b)] = fn(s0, s1, b)
        return cls(tuple(t), name)


def kernel_decimation() -> BlockKernel:
    """Block spin equals the second spin of the block."""
    return BlockKernel.from_function(lambda s0, s1, b: 0.5 + 0.5 * b * s1, "decimation")


def kernel_majority() -> BlockKernel:
    """Majority rule with a fair coin on ties."""
    return BlockKernel.from_function(lambda s0, s1, b: 0.5 + 0.25 * b * (s0 + s1), "majority")


KERNELS = {"decimation": kernel_decimation, "majority": kernel_majority}


def get_kernel(name: str) -> BlockKernel:
    try:
        return KERNELS[name]()
    except KeyError:
        raise KernelError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}") from None


# -- Hamiltonian --------------------------------------------------------------

@dataclass(frozen=True)
class HamiltonianSpec:
    """``-gamma sum sigma_i sigma_{i+1} - eps sum_{i<j} J(j-i) sigma_i sigma_j``.

    ``r_max`` is the largest distance kept as explicit terms; ``r_max = 1``
    keeps only the nearest-neighbour part.  A custom ``coupling`` must come with
    ``coupling_tail`` = sum over d > r_max of |J(d)|.
    """

    gamma: float
    eps: float = 0.0
    alpha: float = 2.0
    r_max: int = 1
    coupling: Optional[Callable[[int], float]] = None
    coupling_tail: Optional[float] = None

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.eps < 0:
            raise ValueError("eps must be nonnegative")
        if not self.alpha > 1 and self.coupling is None:
            raise ValueError("alpha must exceed 1")
        if self.r_max < 1:
            raise ValueError("r_max must be >= 1")

    def J(self, d: int) -> float:
        return self.coupling(d) if self.coupling is not None else power_law(d, self.alpha)


def hamiltonian_hat(spec: HamiltonianSpec, weights: NormWeights = NormWeights(),
                    interval: bool = False):
    """Part of the Hamiltonian whose keys touch sites 0 or 1, truncated at ``r_max``.

    Returns ``(poly, tail)`` where ``tail`` bounds the weighted norm of the
    dropped terms (sign convention: the polynomial is ``-H``).
    """
    terms = {((0, 1), ()): spec.gamma, ((1, 2), ()): spec.gamma}
    if spec.eps:
        for i in (0, 1):
            for d in range(2, spec.r_max + 1):
                key = ((i, i + d), ())
                terms[key] = terms.get(key, 0.0) + spec.eps * spec.J(d)
    poly = SpinPolynomial(terms)
    if interval:
        poly = poly.to_interval()
    if spec.eps == 0:
        tail = Interval(0.0) if interval else 0.0
    elif spec.coupling is not None:
        if spec.coupling_tail is None:
            raise ValueError("custom coupling needs coupling_tail")
        t = Interval(2.0) * Interval(spec.eps) * Interval(spec.coupling_tail) * weights.ifactor(2, 0)
        tail = t if interval else t.hi
    else:
        t = Interval(spec.eps) * coupling_tail_sum(spec.alpha, spec.r_max + 1) * weights.ifactor(2, 0)
        tail = t if interval else t.hi
    return poly, tail


# -- the block sum ------------------------------------------------------------

@dataclass(frozen=True)
class FTable:
    """Coefficients ``f(V, W)``, ``V >= 2``, ``W <= 0``; the empty-key constant is kept apart."""

    poly: SpinPolynomial
    const: object = 0.0

    def __post_init__(self):
        for (v, w), _ in self.poly.items():
            if v == () and w == ():
                raise ValueError("constant term belongs in FTable.const")
            if any(i < 2 for i in v) or any(j > 0 for j in w):
                raise ValueError(f"f-table key {(v, w)} violates V >= 2, W <= 0")


def _check_boundary_keys(c: SpinPolynomial, what: str = "c") -> None:
    for (x, y), _ in c.items():
        if not x or min(x) < 0 or not ({0, 1} & set(x)):
            raise ValueError(f"{what} key {(x, y)}: X must be >= 0 and meet {{0, 1}}")
        if y and max(y) >= 0:
            raise ValueError(f"{what} key {(x, y)}: Y must be < 0")


@dataclass
class _Block:
    sup: Support            # full support, sigma_0 bit 0, sigma_1 bit 1, s_0 top bit
    ext: Support            # external sites only
    logw: object            # per (external config, inner config) log weight, -inf where k = 0
    valid: np.ndarray       # k > 0 mask, shape (M, 4)
    shift: np.ndarray       # per external config max exponent
    terms: object           # k * exp(v - shift), shape (M, 4), zero where k = 0
    interval: bool


def _prepare(c: SpinPolynomial, kernel: BlockKernel, extra: tuple = (), interval: bool = False,
             s_max: int = S_MAX) -> _Block:
    _check_boundary_keys(c)
    polys = (c,) + tuple(extra)
    sig = {0, 1}
    blk = {0}
    for p in polys:
        sig.update(p.sigma_sites)
        blk.update(p.block_sites)
    if min(sig) < 0 or max(blk) > 0:
        raise ValueError("sites outside sigma >= 0, s <= 0")
    ext_sigma = tuple(sorted(sig - {0, 1}))
    ext_block = tuple(sorted(blk - {0})) + (0,)
    n = 2 + len(ext_sigma) + len(ext_block)
    if n > s_max:
        from .algebra import SupportTooLarge
        raise SupportTooLarge(f"block sum needs {n} sites, cap is {s_max}")
    sup = Support((0, 1) + ext_sigma, ext_block)
    ext = Support(ext_sigma, ext_block)
    m_ext = ext.size
    s0_bit = ext.n - 1
    b_neg = (np.arange(m_ext) >> s0_bit) & 1
    table = np.array(kernel.table)
    kw = np.stack([table[i + 4 * b_neg] for i in range(4)], axis=1)
    valid = kw > 0

    vals = values_on(c, sup, interval=interval)
    if interval:
        vals = Interval.coerce(vals)
        lo = np.asarray(vals.lo).reshape(m_ext, 4)
        hi = np.asarray(vals.hi).reshape(m_ext, 4)
        shift = np.where(valid, hi, -np.inf).max(axis=1)
        ex = iexp(Interval(np.where(valid, lo, 0.0), np.where(valid, hi, 0.0)) - shift[:, None])
        t = ex * Interval(kw)
        terms = Interval(np.where(valid, t.lo, 0.0), np.where(valid, t.hi, 0.0))
    else:
        v = np.asarray(vals).reshape(m_ext, 4)
        shift = np.where(valid, v, -np.inf).max(axis=1)
        with np.errstate(over="ignore", invalid="ignore"):
            terms = np.where(valid, kw * np.exp(np.where(valid, v, 0.0) - shift[:, None]), 0.0)
    return _Block(sup, ext, None, valid, shift, terms, interval)


def _row_sum(terms) -> object:
    if isinstance(terms, Interval):
        out = terms[:, 0]
        for i in range(1, 4):
            out = out + terms[:, i]
        return out
    # fixed left-to-right order
    return ((terms[:, 0] + terms[:, 1]) + terms[:, 2]) + terms[:, 3]


def _log_partition(blk: _Block):
    z = _row_sum(blk.terms)
    if blk.interval:
        if np.any(np.asarray(z.lo) <= 0):
            raise BlockSumError("block partition sum not certified positive")
        return ilog(z) + blk.shift
    if np.any(z <= 0) or not np.all(np.isfinite(z)):
        raise BlockSumError("block partition sum vanished or overflowed")
    return np.log(z) + blk.shift


def block_sum_out(c: SpinPolynomial, kernel: BlockKernel, interval: bool | None = None) -> FTable:
    """Sum out ``sigma_0, sigma_1`` and expand the log of the result."""
    interval = c.is_interval if interval is None else interval
    blk = _prepare(c, kernel, interval=interval)
    logz = _log_partition(blk)
    poly = coefficients_from_values(logz, blk.ext)
    const = poly.coef((), ())
    terms = {k: v for k, v in poly.items() if k != ((), ())}
    return FTable(SpinPolynomial(terms), const)


def expectation(g: SpinPolynomial, c: SpinPolynomial, kernel: BlockKernel,
                interval: bool | None = None) -> SpinPolynomial:
    """Expansion of the block average ``<g>_c`` in sites ``U >= 2``, ``T <= 0``."""
    interval = (c.is_interval or g.is_interval) if interval is None else interval
    for (x, y), _ in g.items():
        if (x and min(x) < 0) or (y and max(y) >= 0):
            raise ValueError(f"observable key {(x, y)} must have X >= 0 and Y < 0")
    blk = _prepare(c, kernel, extra=(g,), interval=interval)
    gv = values_on(g, blk.sup, interval=interval)
    m_ext = blk.ext.size
    if interval:
        gv = Interval.coerce(gv)
        gvals = Interval(np.asarray(gv.lo).reshape(m_ext, 4), np.asarray(gv.hi).reshape(m_ext, 4))
    else:
        gvals = np.asarray(gv).reshape(m_ext, 4)
    z = _row_sum(blk.terms)
    num = _row_sum(blk.terms * gvals)
    if interval:
        if np.any(np.asarray(z.lo) <= 0):
            raise BlockSumError("block partition sum not certified positive")
        ratio = num / z
    else:
        if np.any(z <= 0):
            raise BlockSumError("block partition sum vanished")
        ratio = num / z
    return coefficients_from_values(ratio, blk.ext)


def block_expectation(a: tuple, c: SpinPolynomial, kernel: BlockKernel,
                      interval: bool | None = None) -> SpinPolynomial:
    """``<sigma(A)>_c`` for a nonempty ``A`` inside {0, 1}."""
    a = tuple(sorted(a))
    if not a or not set(a) <= {0, 1}:
        raise ValueError("A must be a nonempty subset of {0, 1}")
    return expectation(monomial(a, ()), c, kernel, interval)


BLOCK_SUBSETS = ((0,), (1,), (0, 1))


def contraction_components(c: SpinPolynomial, kernel: BlockKernel, w: NormWeights = NormWeights(),
                           interval: bool | None = None) -> dict:
    """``exp(-mu |A|) ||<sigma(A)>_c||`` for each nonempty ``A``."""
    out = {}
    for a in BLOCK_SUBSETS:
        e = block_expectation(a, c, kernel, interval)
        nrm = weighted_norm(e, w)
        if isinstance(nrm, Interval) or interval:
            out[a] = Interval.coerce(nrm) * iexp(Interval(-w.mu * len(a)))
        else:
            out[a] = nrm * math.exp(-w.mu * len(a))
    return out


def contraction_diagnostic(c: SpinPolynomial, kernel: BlockKernel, w: NormWeights = NormWeights(),
                           interval: bool | None = None):
    """Max over ``A`` of the weighted expectation norms; bounds the Jacobian of F."""
    comps = contraction_components(c, kernel, w, interval)
    vals = list(comps.values())
    if any(isinstance(v, Interval) for v in vals):
        return Interval(max(v.lo for v in vals), max(v.hi for v in vals))
    return max(vals)


def reindex(ft: FTable) -> SpinPolynomial:
    """Move each ``f(V, W)`` with ``V`` nonempty back to the boundary: ``(V - 2k, W - k)``."""
    acc = defaultdict(list)
    for (v, w), val in ft.poly.items():
        if not v:
            continue
        k = min(v) // 2
        acc[(tuple(i - 2 * k for i in v), tuple(j - k for j in w))].append(val)
    return SpinPolynomial({key: _sum(vals) for key, vals in acc.items()})


def rg_F(c: SpinPolynomial, kernel: BlockKernel, interval: bool | None = None) -> SpinPolynomial:
    """The shift-summed map ``F``; pass ``c + H_hat`` to get the fixed-point map."""
    return reindex(block_sum_out(c, kernel, interval))


def rg_step(c: SpinPolynomial, kernel: BlockKernel, interval: bool | None = None):
    """``(F(c), f-table)`` from a single block sum."""
    ft = block_sum_out(c, kernel, interval)
    return reindex(ft), ft


# -- renormalized Hamiltonian ---------------------------------------------------

def canonical_class(w: tuple) -> tuple:
    """Translate a block-site set so its largest site is 0."""
    if not w:
        return ()
    top = max(w)
    return tuple(j - top for j in w)


@dataclass
class RenormalizedHamiltonian:
    """Couplings ``h'(W)`` of ``-H'`` by translation class, plus the free energy per block."""

    classes: dict = field(default_factory=dict)
    free_energy: object = 0.0

    @property
    def single_flip_norm(self):
        """``sum_{W containing 0} |h'(W)|`` = ``sum_classes |W| |h'(class)|``."""
        vals = [abs(v) * len(w) for w, v in sorted(self.classes.items())]
        if not vals:
            return 0.0
        return _sum(vals)

    def weighted_flip_norm(self, nu: float):
        vals = [abs(v) * math.exp(nu * len(w)) for w, v in sorted(self.classes.items())]
        return _sum(vals) if vals else 0.0

    def as_poly(self) -> SpinPolynomial:
        return SpinPolynomial({((), w): v for w, v in self.classes.items()})


def renormalized_hamiltonian(ft: FTable) -> RenormalizedHamiltonian:
    acc = defaultdict(list)
    for (v, w), val in ft.poly.items():
        if v or not w:
            continue
        acc[canonical_class(w)].append(val)
    classes = {k: _sum(vs) for k, vs in sorted(acc.items())}
    return RenormalizedHamiltonian(classes, ft.const)


# -- rho ----------------------------------------------------------------------

def rho(r):
    """``2 (e^r - 1) / (2 - e^r)`` on ``0 <= r < ln 2``."""
    if isinstance(r, Interval):
        if r.lo < 0 or not r.hi < LN2:
            raise ValueError(f"rho needs 0 <= r < ln 2, got {r}")
        e = iexp(r)
        if not e.hi < 2.0:
            raise ValueError("rho argument too close to ln 2 for a certified enclosure")
        # increasing in r: evaluate endpoints separately to keep the enclosure tight
        lo_e, hi_e = Interval(e.lo), Interval(e.hi)
        lo = (Interval(2.0) * (lo_e - 1.0) / (Interval(2.0) - lo_e)).lo
        hi = (Interval(2.0) * (hi_e - 1.0) / (Interval(2.0) - hi_e)).hi
        return Interval(max(lo, 0.0), hi)
    if r < 0 or r >= LN2:
        raise ValueError(f"rho needs 0 <= r < ln 2, got {r}")
    e = math.exp(r)
    return 2.0 * (e - 1.0) / (2.0 - e)


def rho_inverse(y: float) -> float:
    """Solve ``rho(t) = y`` for ``t``: ``ln((2y + 2) / (y + 2))``."""
    if y < 0:
        raise ValueError("rho is nonnegative")
    return math.log((2.0 * y + 2.0) / (y + 2.0))


# -- exact toy chain ----------------------------------------------------------

def _toy_couplings(n_sites: int, gamma: float, eps: float, alpha: float, images: int = 2000) -> np.ndarray:
    k = np.zeros((n_sites, n_sites))
    for i in range(n_sites):
        for j in range(i + 1, n_sites):
            d = j - i
            jsum = 0.0
            for n in range(-images, images + 1):
                dd = abs(d + n * n_sites)
                if dd >= 2:
                    jsum += dd ** -alpha
            k[i, j] = k[j, i] = eps * jsum
    for i in range(n_sites):
        j = (i + 1) % n_sites
        k[i, j] += gamma
        k[j, i] += gamma if i != j else 0.0
    return k


def toy_chain_partition(kernel: BlockKernel, gamma: float, eps: float = 0.0, alpha: float = 2.0,
                        n_blocks: int = 3):
    """Return ``(log sum_sigma e^{-H}, log sum_s e^{-H'})`` on a periodic chain of ``n_blocks`` blocks.

    ``-H'(s) = log sum_sigma K(sigma, s) e^{-H(sigma)}`` is computed by direct
    summation, expanded into its block-spin coefficients, and the second sum is
    taken over the values of that expansion.
    """
    n = 2 * n_blocks
    coup = _toy_couplings(n, gamma, eps, alpha)
    idx = np.arange(1 << n)
    spins = 1.0 - 2.0 * ((idx[:, None] >> np.arange(n)) & 1)
    minus_h = np.einsum("ci,ij,cj->c", spins, np.triu(coup, 1), spins)
    top = minus_h.max()
    boltz = np.exp(minus_h - top)
    log_z_orig = math.log(math.fsum(boltz)) + top
    table = np.array(kernel.table)
    minus_h_ren = np.empty(1 << n_blocks)
    for s_cfg in range(1 << n_blocks):
        weight = np.ones(1 << n)
        for b in range(n_blocks):
            bneg = (s_cfg >> b) & 1
            inner = ((idx >> (2 * b)) & 1) + 2 * ((idx >> (2 * b + 1)) & 1)
            weight = weight * table[inner + 4 * bneg]
        minus_h_ren[s_cfg] = math.log(math.fsum(weight * boltz)) + top
    sup = Support((), tuple(range(n_blocks)))
    h_ren = coefficients_from_values(minus_h_ren, sup)
    vals = values_on(h_ren, sup)
    shift = vals.max()
    log_z_ren = math.log(math.fsum(np.exp(vals - shift))) + shift
    return log_z_orig, log_z_ren
