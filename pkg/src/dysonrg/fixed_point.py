"""Iterate ``c -> F(c + H_hat)`` under a finite truncation policy.

Each step does one dense block sum.  The log-partition coefficients are
filtered in numpy (windows, key sizes, drop tolerance) before any Python-level
polynomial is built, so a step costs a few transforms of the covering support
no matter how many coefficients the dense table holds.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .algebra import S_MAX, NormWeights, SpinPolynomial, weighted_norm
from .certify import SeedPoint
from .rgmap import (
    BlockKernel,
    HamiltonianSpec,
    RenormalizedHamiltonian,
    _log_partition,
    _prepare,
    canonical_class,
    hamiltonian_hat,
)

DIVERGENCE_STREAK = 5
# growth below this multiple of ``tol`` is rounding noise, not divergence
NOISE_FACTOR = 1e3
STALL_STEPS = 10


class DivergenceError(RuntimeError):
    """Residual grew for too many consecutive steps; ``result`` holds the history so far."""

    def __init__(self, message: str, result: "FixedPointResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class TruncationPolicy:
    window_sigma: int = 12
    window_s: int = -8
    max_x_size: int = 4
    max_y_size: int = 4
    drop_tol: float = 1e-12

    def __post_init__(self):
        if self.window_sigma < 2:
            raise ValueError("window_sigma must be at least 2")
        if self.window_s > -1:
            raise ValueError("window_s must be at most -1")
        if (self.window_sigma + 1) + (1 - self.window_s) > S_MAX:
            raise ValueError(f"windows need {(self.window_sigma + 1) + (1 - self.window_s)} sites, "
                             f"cap is {S_MAX}")
        if self.max_x_size < 1 or self.max_y_size < 0:
            raise ValueError("key size limits must be positive")
        if not self.drop_tol >= 0:
            raise ValueError("drop_tol must be nonnegative")


@dataclass
class FixedPointResult:
    c_star: SpinPolynomial
    residual: float
    iterations: int
    converged: bool
    residual_history: list
    rate_history: list
    renormalized: RenormalizedHamiltonian
    dropped_norm: float
    truncation_loss: float
    empty_y_mass: float
    h_tail: float
    policy: TruncationPolicy = field(default_factory=TruncationPolicy)

    @property
    def classes(self) -> dict:
        return self.renormalized.classes

    @property
    def free_energy(self):
        return self.renormalized.free_energy

    @property
    def single_flip_norm(self):
        return self.renormalized.single_flip_norm

    def observed_rate(self, burn_in: int = 2) -> float:
        """Largest successive-difference ratio after ``burn_in`` steps (nan if too few)."""
        tail = [r for r in self.rate_history[burn_in:] if math.isfinite(r)]
        return max(tail) if tail else math.nan


@dataclass
class _StepOut:
    c_next: SpinPolynomial
    dropped: float
    classes: dict
    const: float


def _lowest_bit(m: np.ndarray) -> np.ndarray:
    low = m & -m
    return np.log2(np.maximum(low, 1)).astype(np.int64)


def _dense_step(c: SpinPolynomial, kernel: BlockKernel, policy: TruncationPolicy,
                w: NormWeights) -> _StepOut:
    blk = _prepare(c, kernel)
    logz = _log_partition(blk)
    coeffs = kernels.wht(logz) / blk.ext.size
    ext = blk.ext
    ns, nb = len(ext.sigma), len(ext.block)
    masks = np.nonzero(coeffs)[0].astype(np.int64)
    vals = coeffs[masks]
    sig_part = masks & ((1 << ns) - 1)
    blk_part = masks >> ns
    nx = np.bitwise_count(sig_part).astype(np.int64)
    ny = np.bitwise_count(blk_part).astype(np.int64)

    # the constant and the V = {} entries are the renormalized Hamiltonian
    const = float(coeffs[0])
    classes = defaultdict(list)
    h_sel = (sig_part == 0) & (blk_part != 0)
    for m, v in zip(blk_part[h_sel], vals[h_sel]):
        wsites = tuple(ext.block[b] for b in range(nb) if m >> b & 1)
        classes[canonical_class(wsites)].append(float(v))
    classes = {k: math.fsum(vs) for k, vs in sorted(classes.items())}
    classes = {k: v for k, v in classes.items() if abs(v) * math.exp(w.nu * len(k)) >= policy.drop_tol}

    # V nonempty: shift back by k = min(V) // 2 and truncate
    sel = sig_part != 0
    masks, vals, sig_part, blk_part, nx, ny = (a[sel] for a in (masks, vals, sig_part, blk_part, nx, ny))
    sig_sites = np.asarray(ext.sigma, dtype=np.int64)
    blk_sites = np.asarray(ext.block, dtype=np.int64)
    k = sig_sites[_lowest_bit(sig_part)] // 2
    min_w = np.where(blk_part != 0, blk_sites[_lowest_bit(blk_part)], 0)
    weight = np.exp(w.mu * nx + w.nu * ny)
    keep = (nx <= policy.max_x_size) & (ny <= policy.max_y_size)
    keep &= (blk_part == 0) | (min_w - k >= policy.window_s)
    keep &= np.abs(vals) * weight >= policy.drop_tol
    dropped = math.fsum(np.abs(vals[~keep]) * weight[~keep])

    acc = defaultdict(list)
    for m_s, m_b, kk, v in zip(sig_part[keep], blk_part[keep], k[keep], vals[keep]):
        x = tuple(int(ext.sigma[b]) - 2 * int(kk) for b in range(ns) if m_s >> b & 1)
        y = tuple(int(ext.block[b]) - int(kk) for b in range(nb) if m_b >> b & 1)
        acc[(x, y)].append(float(v))
    c_next = SpinPolynomial({key: math.fsum(vs) for key, vs in acc.items()})
    return _StepOut(c_next, dropped, classes, const)


def iterate(seed: SeedPoint, spec: HamiltonianSpec, kernel: Optional[BlockKernel] = None,
            policy: TruncationPolicy = TruncationPolicy(), w: NormWeights = NormWeights(1.0),
            tol: float = 1e-12, max_iter: int = 200) -> FixedPointResult:
    """Run ``c_{n+1} = truncate(F(c_n + H_hat))`` from the seed.

    ``H_hat`` keeps couplings out to ``window_sigma - 1``; the weighted norm of
    the rest is reported as ``h_tail``.  Raises :class:`DivergenceError` after
    ``DIVERGENCE_STREAK`` consecutive residual increases; stops unconverged
    when the residual sets no new minimum for ``STALL_STEPS`` steps.
    """
    kernel = kernel or seed.kernel
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    h_spec = HamiltonianSpec(spec.gamma, spec.eps, spec.alpha, r_max=policy.window_sigma - 1,
                             coupling=spec.coupling, coupling_tail=spec.coupling_tail)
    h_hat, h_tail = hamiltonian_hat(h_spec, w)
    c = seed.c0
    residuals, rates = [], []
    dropped = 0.0
    streak = 0
    best, since_best = math.inf, 0
    step = None
    converged = False
    for _ in range(max_iter):
        step = _dense_step(c + h_hat, kernel, policy, w)
        res = weighted_norm(step.c_next - c, w)
        if residuals:
            rates.append(res / residuals[-1] if residuals[-1] > 0 else math.nan)
            streak = streak + 1 if res > residuals[-1] and res > NOISE_FACTOR * tol else 0
        residuals.append(res)
        dropped = step.dropped
        c = step.c_next
        if res < tol:
            converged = True
            break
        # a residual stuck at the rounding floor will never reach tol
        best, since_best = (res, 0) if res < best else (best, since_best + 1)
        if since_best >= STALL_STEPS:
            break
        if streak >= DIVERGENCE_STREAK:
            result = _result(c, residuals, rates, step, dropped, h_tail, policy, False)
            raise DivergenceError(
                f"residual grew for {DIVERGENCE_STREAK} consecutive steps (last {res:.3e})", result)
    return _result(c, residuals, rates, step, dropped, h_tail, policy, converged)


def _result(c, residuals, rates, step, dropped, h_tail, policy, converged) -> FixedPointResult:
    late = [r for r in rates[2:] if math.isfinite(r) and r < 1]
    q = max(late) if late else math.nan
    # a perturbation of size d in F moves a q-contraction's fixed point by at most d / (1 - q)
    loss = dropped / (1.0 - q) if math.isfinite(q) else math.inf
    empty_y = math.fsum(abs(v) for (x, y), v in c.items() if not y)
    return FixedPointResult(
        c_star=c,
        residual=residuals[-1],
        iterations=len(residuals),
        converged=converged,
        residual_history=residuals,
        rate_history=rates,
        renormalized=RenormalizedHamiltonian(step.classes, step.const),
        dropped_norm=dropped,
        truncation_loss=loss if dropped > 0 else 0.0,
        empty_y_mass=empty_y,
        h_tail=float(h_tail),
        policy=policy,
    )


def flip_cost(result) -> float:
    """``sum_{W containing 0} |h'(W)|``, i.e. each class counted ``|W|`` times."""
    ren = result.renormalized if isinstance(result, FixedPointResult) else result
    return float(ren.single_flip_norm)


__all__ = ["DivergenceError", "FixedPointResult", "TruncationPolicy", "flip_cost", "iterate"]
